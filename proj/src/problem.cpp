#include "lamcmc/problem.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace lamcmc {
namespace {

void check_spd(const Matrix& m, const char* what) {
  if (m.rows() != m.cols()) throw InvalidArgument(std::string(what) + " must be square");
  if (!m.isApprox(m.transpose(), 1e-12)) throw InvalidArgument(std::string(what) + " must be symmetric");
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success)
    throw InvalidArgument(std::string(what) + " must be positive definite");
}

double log_det_from_chol(const Matrix& l) { return 2.0 * l.diagonal().array().log().sum(); }

std::optional<Box> intersect(const std::optional<Box>& a, const std::optional<Box>& b) {
  if (!a) return b;
  if (!b) return a;
  Box out{a->lower.cwiseMax(b->lower), a->upper.cwiseMin(b->upper)};
  return out;
}

void check_box(const Box& b, std::size_t dim) {
  if (static_cast<std::size_t>(b.lower.size()) != dim || static_cast<std::size_t>(b.upper.size()) != dim)
    throw InvalidArgument("box dimension mismatch");
  if (!(b.lower.array() < b.upper.array()).all()) throw InvalidArgument("box needs lower < upper");
}

}  // namespace

bool Box::contains(const Vector& theta) const {
  return (theta.array() >= lower.array()).all() && (theta.array() <= upper.array()).all();
}

Vector Box::clip(const Vector& theta) const { return theta.cwiseMax(lower).cwiseMin(upper); }

TargetProblem TargetProblem::forward(std::size_t dim, ModelFn model, Vector data, Matrix noise_cov,
                                     Prior prior, std::optional<Box> support) {
  if (dim == 0) throw InvalidArgument("TargetProblem: dim must be positive");
  if (!model) throw InvalidArgument("TargetProblem: model callback is empty");
  if (data.size() == 0) throw InvalidArgument("TargetProblem: data must be non-empty");
  if (noise_cov.rows() != data.size()) throw InvalidArgument("TargetProblem: noise_cov size != data size");
  check_spd(noise_cov, "noise covariance");

  TargetProblem p;
  p.flavor_ = Flavor::forward_model;
  p.dim_ = dim;
  p.output_dim_ = static_cast<std::size_t>(data.size());
  p.model_ = std::move(model);
  p.data_ = std::move(data);
  Eigen::LLT<Matrix> llt(noise_cov);
  p.noise_precision_ = llt.solve(Matrix::Identity(noise_cov.rows(), noise_cov.cols()));
  p.noise_log_norm_ = -0.5 * (static_cast<double>(p.output_dim_) * std::log(2.0 * std::numbers::pi) +
                              log_det_from_chol(llt.matrixL()));
  p.prior_ = std::move(prior);
  p.support_ = support;
  if (p.support_) check_box(*p.support_, dim);

  if (const auto* g = std::get_if<GaussianPrior>(&p.prior_)) {
    if (static_cast<std::size_t>(g->mean.size()) != dim) throw InvalidArgument("prior mean dimension");
    check_spd(g->cov, "prior covariance");
    Eigen::LLT<Matrix> pl(g->cov);
    p.prior_chol_ = pl.matrixL();
    p.prior_precision_ = pl.solve(Matrix::Identity(dim, dim));
    p.prior_log_norm_ = -0.5 * (static_cast<double>(dim) * std::log(2.0 * std::numbers::pi) +
                                log_det_from_chol(p.prior_chol_));
  } else {
    const auto& box = std::get<Box>(p.prior_);
    check_box(box, dim);
    p.prior_precision_ = Matrix::Zero(dim, dim);
    p.prior_log_norm_ = -(box.upper - box.lower).array().log().sum();
    p.support_ = intersect(p.support_, box);
  }
  return p;
}

TargetProblem TargetProblem::log_density(std::size_t dim, ModelFn model, Prior seed_prior,
                                         std::optional<Box> support) {
  // Reuse the forward constructor's prior validation with a dummy likelihood.
  TargetProblem p = forward(dim, std::move(model), Vector::Zero(1), Matrix::Identity(1, 1),
                            std::move(seed_prior), support);
  p.flavor_ = Flavor::log_density;
  p.output_dim_ = 1;
  p.data_.resize(0);
  p.noise_precision_.resize(0, 0);
  p.noise_log_norm_ = 0.0;
  return p;
}

Vector TargetProblem::evaluate(const Vector& theta) const {
  if (static_cast<std::size_t>(theta.size()) != dim_) throw InvalidArgument("evaluate: dimension mismatch");
  Vector out = model_(theta);
  if (static_cast<std::size_t>(out.size()) != output_dim_)
    throw ModelError("model returned " + std::to_string(out.size()) + " outputs, expected " +
                         std::to_string(output_dim_),
                     theta);
  if (!out.allFinite()) throw ModelError("model returned a non-finite output", theta);
  return out;
}

ModelDerivativesAt TargetProblem::derivatives(const Vector& theta) const {
  if (!derivatives_) throw InvalidArgument("problem has no analytic derivatives");
  return derivatives_(theta);
}

bool TargetProblem::in_support(const Vector& theta) const {
  return theta.allFinite() && (!support_ || support_->contains(theta));
}

double TargetProblem::log_prior(const Vector& theta) const {
  if (!in_support(theta)) return -std::numeric_limits<double>::infinity();
  if (const auto* g = std::get_if<GaussianPrior>(&prior_)) {
    const Vector r = theta - g->mean;
    return prior_log_norm_ - 0.5 * r.dot(prior_precision_ * r);
  }
  return prior_log_norm_;
}

Vector TargetProblem::grad_log_prior(const Vector& theta) const {
  if (const auto* g = std::get_if<GaussianPrior>(&prior_)) return -prior_precision_ * (theta - g->mean);
  return Vector::Zero(dim_);
}

Matrix TargetProblem::prior_precision() const { return prior_precision_; }

double TargetProblem::log_likelihood(const Vector& output) const {
  const Vector r = data_ - output;
  return noise_log_norm_ - 0.5 * r.dot(noise_precision_ * r);
}

double TargetProblem::log_target(const Vector& theta, const Vector& output) const {
  if (!in_support(theta)) return -std::numeric_limits<double>::infinity();
  if (flavor_ == Flavor::log_density) return output(0);
  return log_likelihood(output) + log_prior(theta);
}

}  // namespace lamcmc
