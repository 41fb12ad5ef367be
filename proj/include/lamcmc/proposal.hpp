#pragma once

#include "lamcmc/posterior.hpp"
#include "lamcmc/problem.hpp"

#include <cstddef>
#include <optional>

namespace lamcmc {

enum class ProposalFamily { am, mala, mmala };

struct AmParams {
  std::size_t adapt_start = 200;  // steps before the empirical covariance is used
  double jitter = 1e-6;           // added to the empirical covariance diagonal
  std::optional<double> scale;    // defaults to 2.4^2 / d
};

struct ProposalSpec {
  ProposalFamily family = ProposalFamily::am;
  /// Langevin step size (MALA family) or the initial random-walk standard
  /// deviation before AM adaptation starts.
  double step_size = 1.0;
  AmParams am;
  double hessian_floor = 1e-2;

  bool needs_derivatives() const { return family != ProposalFamily::am; }
  bool symmetric() const { return family == ProposalFamily::am; }
  void validate() const;
};

/// Running adaptation state for adaptive Metropolis.
class AmState {
 public:
  AmState() = default;
  AmState(std::size_t dim, const ProposalSpec& spec);

  /// Record the realised chain state of a completed step.
  void update(const Vector& theta);

  std::size_t count() const { return n_; }
  const Vector& mean() const { return mean_; }
  Matrix empirical_covariance() const;

  /// Proposal is theta + scale() * cov_sqrt() * z.
  double scale() const { return scale_; }
  const Matrix& cov_sqrt() const { return cov_sqrt_; }
  Matrix proposal_covariance() const { return scale_ * scale_ * cov_sqrt_ * cov_sqrt_.transpose(); }

 private:
  std::size_t dim_ = 0;
  std::size_t adapt_start_ = 0;
  double jitter_ = 0.0;
  double adapted_scale_ = 1.0;
  std::size_t n_ = 0;
  Vector mean_;
  Matrix m2_;
  double scale_ = 1.0;
  Matrix cov_sqrt_;
};

/// Gaussian Langevin proposal N(mean, cov) with cov = eps * M.
struct MmalaMoments {
  Vector mean;
  Matrix cov;
  Matrix cov_sqrt;  // lower Cholesky factor of cov
};

/// mean = theta + (eps / 2) M grad, cov = eps M.
MmalaMoments moments_from_metric(const Vector& theta, const Vector& grad, const Matrix& metric,
                                 double step_size);

/// Langevin moments at theta. MALA uses M = I; mMALA uses the inverse of
/// inverse_metric(). Throws for the AM family.
MmalaMoments mmala_moments(const Vector& theta, const ModelResponse& response,
                           const TargetProblem& problem, const ProposalSpec& spec);

/// The coupling map r(theta, z, f): deterministic in all of its inputs.
Vector coupled_propose(const Vector& theta, const Vector& z, const ModelResponse& response,
                       const TargetProblem& problem, const ProposalSpec& spec, const AmState& am);

/// log q(from, to | f). AM is symmetric and returns 0 so the ratio cancels.
double proposal_logpdf(const Vector& from, const Vector& to, const ModelResponse& response_at_from,
                       const TargetProblem& problem, const ProposalSpec& spec);

/// log N(x; mean, L L') given the lower factor L.
double gaussian_logpdf(const Vector& x, const Vector& mean, const Matrix& lower_sqrt);

/// log target(from) + log q(from, to | f): one side of the acceptance ratio.
double log_transition_term(const Vector& from, const Vector& to, const ModelResponse& response_at_from,
                           const TargetProblem& problem, const ProposalSpec& spec);

}  // namespace lamcmc
