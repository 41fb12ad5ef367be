#pragma once

#include "lamcmc/problem.hpp"

#include <chrono>
#include <functional>

namespace lamcmc::targets {

/// log pi(x1, x2) = -x1^4 - (2 x2 - x1^2)^2 / 2
double quartic_log_density(const Vector& x);
Vector quartic_gradient(const Vector& x);
Matrix quartic_hessian(const Vector& x);

/// Quartic as a log-density problem (with analytic derivatives). Starting
/// points and initial designs are drawn from N(0, I).
TargetProblem quartic(std::chrono::microseconds latency = std::chrono::microseconds{0});

/// Zero-mean Gaussian N(0, cov) as a log-density problem.
TargetProblem gaussian(const Matrix& cov,
                       std::chrono::microseconds latency = std::chrono::microseconds{0});

/// f(theta) = (theta_1, theta_2 + theta_1^2), Gaussian noise with standard
/// deviation noise_sd on each output, N(0, I) prior.
Vector banana_model(const Vector& theta);
TargetProblem banana(const Vector& data, double noise_sd,
                     std::chrono::microseconds latency = std::chrono::microseconds{0});

/// Wraps a model so that each call first sleeps for `latency`.
ModelFn with_latency(ModelFn model, std::chrono::microseconds latency);

struct Moments {
  Vector mean;
  Matrix cov;
};

/// Mean and covariance of a 2-D unnormalised density by the tensor
/// trapezoidal rule on [lower, upper] with n points per axis (spectrally
/// accurate for smooth densities that are negligible at the box edge).
Moments quadrature_moments_2d(const std::function<double(const Vector&)>& log_density,
                              const Box& box, std::size_t n);

}  // namespace lamcmc::targets
