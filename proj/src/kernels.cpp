#include "lamcmc/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <limits>

namespace lamcmc::kernels {
namespace {

bool use_parallel(std::size_t work) {
  return work >= parallel_threshold && !omp_in_parallel() && omp_get_max_threads() > 1;
}

inline double sq_dist(const double* a, const double* b, std::size_t dim) {
  double s = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double diff = a[k] - b[k];
    s += diff * diff;
  }
  return s;
}

inline double lag_sum(std::span<const double> x, std::size_t lag) {
  const std::size_t n = x.size();
  if (lag >= n) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i + lag < n; ++i) s += x[i] * x[i + lag];
  return s / static_cast<double>(n);
}

}  // namespace

void squared_distances_serial(std::span<const double> points, std::size_t dim,
                              std::span<const double> query, std::span<double> out) {
  const std::size_t n = out.size();
  for (std::size_t i = 0; i < n; ++i) out[i] = sq_dist(points.data() + i * dim, query.data(), dim);
}

void squared_distances_omp(std::span<const double> points, std::size_t dim,
                           std::span<const double> query, std::span<double> out) {
  const auto n = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i)
    out[i] = sq_dist(points.data() + i * dim, query.data(), dim);
}

void squared_distances(std::span<const double> points, std::size_t dim,
                       std::span<const double> query, std::span<double> out) {
  if (use_parallel(out.size()))
    squared_distances_omp(points, dim, query, out);
  else
    squared_distances_serial(points, dim, query, out);
}

void min_squared_distances_serial(std::span<const double> candidates,
                                  std::span<const double> points, std::size_t dim,
                                  std::span<double> out) {
  const std::size_t n_points = dim == 0 ? 0 : points.size() / dim;
  for (std::size_t c = 0; c < out.size(); ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_points; ++i)
      best = std::min(best, sq_dist(candidates.data() + c * dim, points.data() + i * dim, dim));
    out[c] = best;
  }
}

void min_squared_distances_omp(std::span<const double> candidates,
                               std::span<const double> points, std::size_t dim,
                               std::span<double> out) {
  const std::size_t n_points = dim == 0 ? 0 : points.size() / dim;
  const auto n_cand = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < n_cand; ++c) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_points; ++i)
      best = std::min(best, sq_dist(candidates.data() + c * dim, points.data() + i * dim, dim));
    out[c] = best;
  }
}

void min_squared_distances(std::span<const double> candidates, std::span<const double> points,
                           std::size_t dim, std::span<double> out) {
  const std::size_t n_points = dim == 0 ? 0 : points.size() / dim;
  if (use_parallel(out.size() * n_points))
    min_squared_distances_omp(candidates, points, dim, out);
  else
    min_squared_distances_serial(candidates, points, dim, out);
}

void autocovariance_serial(std::span<const double> centered, std::size_t first_lag,
                           std::span<double> out) {
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = lag_sum(centered, first_lag + k);
}

void autocovariance_omp(std::span<const double> centered, std::size_t first_lag,
                        std::span<double> out) {
  const auto n_lags = static_cast<std::ptrdiff_t>(out.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < n_lags; ++k) out[k] = lag_sum(centered, first_lag + k);
}

void autocovariance(std::span<const double> centered, std::size_t first_lag,
                    std::span<double> out) {
  if (use_parallel(centered.size() * out.size()))
    autocovariance_omp(centered, first_lag, out);
  else
    autocovariance_serial(centered, first_lag, out);
}

}  // namespace lamcmc::kernels
