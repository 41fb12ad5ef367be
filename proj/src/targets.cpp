#include "lamcmc/targets.hpp"

#include <cmath>
#include <thread>

namespace lamcmc::targets {

double quartic_log_density(const Vector& x) {
  const double a = 2.0 * x(1) - x(0) * x(0);
  return -std::pow(x(0), 4) - 0.5 * a * a;
}

Vector quartic_gradient(const Vector& x) {
  const double a = 2.0 * x(1) - x(0) * x(0);
  Vector g(2);
  g(0) = -4.0 * std::pow(x(0), 3) + 2.0 * x(0) * a;
  g(1) = -2.0 * a;
  return g;
}

Matrix quartic_hessian(const Vector& x) {
  const double a = 2.0 * x(1) - x(0) * x(0);
  Matrix h(2, 2);
  h(0, 0) = -12.0 * x(0) * x(0) + 2.0 * a - 4.0 * x(0) * x(0);
  h(0, 1) = h(1, 0) = 4.0 * x(0);
  h(1, 1) = -4.0;
  return h;
}

ModelFn with_latency(ModelFn model, std::chrono::microseconds latency) {
  if (latency.count() <= 0) return model;
  return [model = std::move(model), latency](const Vector& theta) {
    std::this_thread::sleep_for(latency);
    return model(theta);
  };
}

TargetProblem quartic(std::chrono::microseconds latency) {
  ModelFn f = [](const Vector& x) { return Vector::Constant(1, quartic_log_density(x)); };
  auto p = TargetProblem::log_density(2, with_latency(std::move(f), latency),
                                      GaussianPrior{Vector::Zero(2), Matrix::Identity(2, 2)});
  p.set_derivatives([](const Vector& x) {
    ModelDerivativesAt d;
    d.jacobian = quartic_gradient(x).transpose();
    d.hessians = {quartic_hessian(x)};
    return d;
  });
  return p;
}

TargetProblem gaussian(const Matrix& cov, std::chrono::microseconds latency) {
  const auto dim = static_cast<std::size_t>(cov.rows());
  Eigen::LLT<Matrix> llt(cov);
  if (llt.info() != Eigen::Success) throw InvalidArgument("gaussian target: cov must be SPD");
  const Matrix precision = llt.solve(Matrix::Identity(dim, dim));
  ModelFn f = [precision](const Vector& x) {
    return Vector::Constant(1, -0.5 * x.dot(precision * x));
  };
  auto p = TargetProblem::log_density(dim, with_latency(std::move(f), latency),
                                      GaussianPrior{Vector::Zero(dim), cov});
  p.set_derivatives([precision](const Vector& x) {
    ModelDerivativesAt d;
    d.jacobian = (-precision * x).transpose();
    d.hessians = {-precision};
    return d;
  });
  return p;
}

Vector banana_model(const Vector& theta) {
  Vector out(2);
  out(0) = theta(0);
  out(1) = theta(1) + theta(0) * theta(0);
  return out;
}

TargetProblem banana(const Vector& data, double noise_sd, std::chrono::microseconds latency) {
  if (data.size() != 2) throw InvalidArgument("banana target: data must have 2 entries");
  if (!(noise_sd > 0.0)) throw InvalidArgument("banana target: noise_sd must be positive");
  auto p = TargetProblem::forward(2, with_latency(banana_model, latency), data,
                                  Matrix::Identity(2, 2) * noise_sd * noise_sd,
                                  GaussianPrior{Vector::Zero(2), Matrix::Identity(2, 2)});
  p.set_derivatives([](const Vector& theta) {
    ModelDerivativesAt d;
    d.jacobian = Matrix{{1.0, 0.0}, {2.0 * theta(0), 1.0}};
    d.hessians = {Matrix::Zero(2, 2), Matrix{{2.0, 0.0}, {0.0, 0.0}}};
    return d;
  });
  return p;
}

Moments quadrature_moments_2d(const std::function<double(const Vector&)>& log_density,
                              const Box& box, std::size_t n) {
  if (n < 3) throw InvalidArgument("quadrature: need at least 3 nodes per axis");
  const double h0 = (box.upper(0) - box.lower(0)) / static_cast<double>(n - 1);
  const double h1 = (box.upper(1) - box.lower(1)) / static_cast<double>(n - 1);

  // Shift by the maximum log density to avoid underflow.
  Matrix logp(n, n);
  double max_log = -std::numeric_limits<double>::infinity();
  Vector x(2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      x << box.lower(0) + h0 * static_cast<double>(i), box.lower(1) + h1 * static_cast<double>(j);
      logp(i, j) = log_density(x);
      max_log = std::max(max_log, logp(i, j));
    }

  double z = 0.0;
  Vector s1 = Vector::Zero(2);
  Matrix s2 = Matrix::Zero(2, 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double wi = (i == 0 || i == n - 1) ? 0.5 : 1.0;
      const double wj = (j == 0 || j == n - 1) ? 0.5 : 1.0;
      x << box.lower(0) + h0 * static_cast<double>(i), box.lower(1) + h1 * static_cast<double>(j);
      const double w = wi * wj * std::exp(logp(i, j) - max_log);
      z += w;
      s1 += w * x;
      s2 += w * x * x.transpose();
    }
  Moments m;
  m.mean = s1 / z;
  m.cov = s2 / z - m.mean * m.mean.transpose();
  return m;
}

}  // namespace lamcmc::targets
