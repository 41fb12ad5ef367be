#pragma once

// Data-parallel inner loops. Every kernel has a serial reference version
// (kept for testing and benchmarking) and an OpenMP version; the unsuffixed
// entry point dispatches on problem size and on whether we are already
// inside a parallel region (chains run one per thread).

#include <cstddef>
#include <span>

namespace lamcmc::kernels {

/// Work below this many elements always runs serially.
inline constexpr std::size_t parallel_threshold = 4096;

// Squared Euclidean distance from `query` to each row of the row-major
// `points` array (n x dim). `out` must hold n values.
void squared_distances_serial(std::span<const double> points, std::size_t dim,
                              std::span<const double> query, std::span<double> out);
void squared_distances_omp(std::span<const double> points, std::size_t dim,
                           std::span<const double> query, std::span<double> out);
void squared_distances(std::span<const double> points, std::size_t dim,
                       std::span<const double> query, std::span<double> out);

// For each row of `candidates`, the minimum squared distance to any row of
// `points`. Both arrays are row-major with `dim` columns.
void min_squared_distances_serial(std::span<const double> candidates,
                                  std::span<const double> points, std::size_t dim,
                                  std::span<double> out);
void min_squared_distances_omp(std::span<const double> candidates,
                               std::span<const double> points, std::size_t dim,
                               std::span<double> out);
void min_squared_distances(std::span<const double> candidates, std::span<const double> points,
                           std::size_t dim, std::span<double> out);

// Autocovariances (divided by n) of a centered series for lags
// first_lag .. first_lag + out.size() - 1. Lags beyond the series are 0.
void autocovariance_serial(std::span<const double> centered, std::size_t first_lag,
                           std::span<double> out);
void autocovariance_omp(std::span<const double> centered, std::size_t first_lag,
                        std::span<double> out);
void autocovariance(std::span<const double> centered, std::size_t first_lag,
                    std::span<double> out);

}  // namespace lamcmc::kernels
