#include "lamcmc/posterior.hpp"

#include <limits>

namespace lamcmc {

ModelResponse response_from_surrogate(const LocalQuadratic& surrogate, const Vector& theta,
                                      bool with_derivatives) {
  ModelResponse r;
  r.value = surrogate.evaluate(theta);
  if (with_derivatives) r.derivatives = surrogate.grad_hess(theta);
  return r;
}

ModelResponse response_from_model(const TargetProblem& problem, const Vector& theta,
                                  bool with_derivatives) {
  ModelResponse r;
  r.value = problem.evaluate(theta);
  if (with_derivatives) {
    auto d = problem.derivatives(theta);
    r.derivatives = LocalDerivatives{std::move(d.jacobian), std::move(d.hessians)};
  }
  return r;
}

double log_target(const TargetProblem& problem, const Vector& theta, const ModelResponse& r) {
  return problem.log_target(theta, r.value);
}

Vector grad_log_target(const TargetProblem& problem, const Vector& theta, const ModelResponse& r) {
  if (!r.derivatives) throw InvalidArgument("grad_log_target: response has no derivatives");
  const Matrix& j = r.derivatives->jacobian;
  if (problem.flavor() == Flavor::log_density) return j.row(0).transpose();
  return j.transpose() * (problem.noise_precision() * (problem.data() - r.value)) +
         problem.grad_log_prior(theta);
}

Matrix spd_projection(const Matrix& symmetric, double floor) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (symmetric + symmetric.transpose()));
  const Vector lambda = eig.eigenvalues().cwiseMax(floor);
  return eig.eigenvectors() * lambda.asDiagonal() * eig.eigenvectors().transpose();
}

Matrix inverse_metric(const TargetProblem& problem, const ModelResponse& r, double floor) {
  if (!r.derivatives) throw InvalidArgument("inverse_metric: response has no derivatives");
  if (problem.flavor() == Flavor::log_density)
    return spd_projection(-r.derivatives->hessians.at(0), floor);
  const Matrix& j = r.derivatives->jacobian;
  const Matrix fisher = j.transpose() * problem.noise_precision() * j + problem.prior_precision();
  return 0.5 * (fisher + fisher.transpose());
}

double approx_log_posterior(const Vector& theta, const SampleStore& store,
                            const TargetProblem& problem, const LocalFitConfig& config,
                            std::optional<std::size_t> exclude) {
  if (!problem.in_support(theta)) return -std::numeric_limits<double>::infinity();
  const LocalQuadratic q = fit_local(theta, store, config, exclude);
  return problem.log_target(theta, q.evaluate(theta));
}

}  // namespace lamcmc
