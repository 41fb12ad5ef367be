#pragma once

#include "lamcmc/local_model.hpp"
#include "lamcmc/problem.hpp"

#include <optional>

namespace lamcmc {

/// Model output at a point, with derivatives when the caller needs them.
/// Comes either from a local surrogate or from the true model (exact chains).
struct ModelResponse {
  Vector value;
  std::optional<LocalDerivatives> derivatives;
};

ModelResponse response_from_surrogate(const LocalQuadratic& surrogate, const Vector& theta,
                                      bool with_derivatives);
ModelResponse response_from_model(const TargetProblem& problem, const Vector& theta,
                                  bool with_derivatives);

/// log(likelihood * prior) at theta, up to a constant; -inf off support.
double log_target(const TargetProblem& problem, const Vector& theta, const ModelResponse& r);

/// Gradient of log_target. Forward flavour: J' Sigma_l^{-1} (d - f) + grad log p.
Vector grad_log_target(const TargetProblem& problem, const Vector& theta, const ModelResponse& r);

/// Inverse mass matrix for simplified manifold MALA.
///   forward flavour:     J' Sigma_l^{-1} J + Sigma_p^{-1} (SPD as it stands)
///   log-density flavour: -Hessian of the log density, projected to be SPD
///                        with eigenvalues at least `floor`
Matrix inverse_metric(const TargetProblem& problem, const ModelResponse& r, double floor);

/// Symmetric eigen-projection: eigenvalues below `floor` are raised to it.
Matrix spd_projection(const Matrix& symmetric, double floor);

/// Unnormalised surrogate log posterior at theta from a fresh local fit.
/// Returns -inf without fitting when theta is off the support.
double approx_log_posterior(const Vector& theta, const SampleStore& store,
                            const TargetProblem& problem, const LocalFitConfig& config,
                            std::optional<std::size_t> exclude = std::nullopt);

}  // namespace lamcmc
