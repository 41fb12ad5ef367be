#include "lamcmc/proposal.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace lamcmc {

void ProposalSpec::validate() const {
  if (!(step_size > 0.0)) throw InvalidArgument("ProposalSpec: step_size must be positive");
  if (!(hessian_floor > 0.0)) throw InvalidArgument("ProposalSpec: hessian_floor must be positive");
  if (!(am.jitter >= 0.0)) throw InvalidArgument("ProposalSpec: AM jitter must be non-negative");
  if (am.scale && !(*am.scale > 0.0)) throw InvalidArgument("ProposalSpec: AM scale must be positive");
}

AmState::AmState(std::size_t dim, const ProposalSpec& spec)
    : dim_(dim),
      adapt_start_(spec.am.adapt_start),
      jitter_(spec.am.jitter),
      adapted_scale_(std::sqrt(spec.am.scale.value_or(2.4 * 2.4 / static_cast<double>(dim)))),
      mean_(Vector::Zero(dim)),
      m2_(Matrix::Zero(dim, dim)),
      scale_(spec.step_size),
      cov_sqrt_(Matrix::Identity(dim, dim)) {}

void AmState::update(const Vector& theta) {
  ++n_;
  const Vector delta = theta - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (theta - mean_).transpose();
  if (n_ >= adapt_start_ && n_ >= 2) {
    const Matrix cov = empirical_covariance() + jitter_ * Matrix::Identity(dim_, dim_);
    Eigen::LLT<Matrix> llt(cov);
    if (llt.info() == Eigen::Success) {
      cov_sqrt_ = llt.matrixL();
      scale_ = adapted_scale_;
    }
  }
}

Matrix AmState::empirical_covariance() const {
  if (n_ < 2) return Matrix::Zero(dim_, dim_);
  Matrix c = m2_ / static_cast<double>(n_ - 1);
  return 0.5 * (c + c.transpose());
}

MmalaMoments moments_from_metric(const Vector& theta, const Vector& grad, const Matrix& metric,
                                 double step_size) {
  MmalaMoments m;
  m.mean = theta + 0.5 * step_size * (metric * grad);
  m.cov = step_size * metric;
  Eigen::LLT<Matrix> llt(m.cov);
  if (llt.info() != Eigen::Success) throw std::logic_error("mmala_moments: covariance is not SPD");
  m.cov_sqrt = llt.matrixL();
  return m;
}

MmalaMoments mmala_moments(const Vector& theta, const ModelResponse& response,
                           const TargetProblem& problem, const ProposalSpec& spec) {
  const auto d = static_cast<Eigen::Index>(theta.size());
  switch (spec.family) {
    case ProposalFamily::mala:
      return moments_from_metric(theta, grad_log_target(problem, theta, response),
                                 Matrix::Identity(d, d), spec.step_size);
    case ProposalFamily::mmala: {
      const Matrix inv = inverse_metric(problem, response, spec.hessian_floor);
      const Matrix metric = inv.llt().solve(Matrix::Identity(d, d));
      return moments_from_metric(theta, grad_log_target(problem, theta, response),
                                 0.5 * (metric + metric.transpose()), spec.step_size);
    }
    case ProposalFamily::am:
      break;
  }
  throw InvalidArgument("mmala_moments: AM proposals have no Langevin moments");
}

Vector coupled_propose(const Vector& theta, const Vector& z, const ModelResponse& response,
                       const TargetProblem& problem, const ProposalSpec& spec, const AmState& am) {
  if (z.size() != theta.size()) throw InvalidArgument("coupled_propose: z dimension mismatch");
  if (spec.family == ProposalFamily::am) return theta + am.scale() * (am.cov_sqrt() * z);
  const MmalaMoments m = mmala_moments(theta, response, problem, spec);
  return m.mean + m.cov_sqrt * z;
}

double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& lower_sqrt) {
  const Vector w = lower_sqrt.triangularView<Eigen::Lower>().solve(x - mean);
  const double log_det_half = lower_sqrt.diagonal().array().log().sum();
  return -0.5 * w.squaredNorm() - log_det_half -
         0.5 * static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi);
}

double proposal_logpdf(const Vector& from, const Vector& to, const ModelResponse& response_at_from,
                       const TargetProblem& problem, const ProposalSpec& spec) {
  if (spec.symmetric()) return 0.0;
  const MmalaMoments m = mmala_moments(from, response_at_from, problem, spec);
  return gaussian_logpdf(to, m.mean, m.cov_sqrt);
}

double log_transition_term(const Vector& from, const Vector& to,
                           const ModelResponse& response_at_from, const TargetProblem& problem,
                           const ProposalSpec& spec) {
  const double lt = log_target(problem, from, response_at_from);
  if (lt == -std::numeric_limits<double>::infinity()) return lt;
  return lt + proposal_logpdf(from, to, response_at_from, problem, spec);
}

}  // namespace lamcmc
