#pragma once

#include "lamcmc/driver.hpp"
#include "lamcmc/types.hpp"

#include <span>
#include <vector>

namespace lamcmc::diagnostics {

/// Effective sample size of a scalar series, n / (1 + 2 sum rho_k) with
/// Geyer's initial positive sequence truncation. A constant series has
/// ESS 1. Result is clamped to (0, n]. Requires n >= 100.
double ess(std::span<const double> series);

struct EssSummary {
  Vector per_coordinate;
  double min = 0.0;
};

/// ESS of each column of `samples` (rows are draws).
EssSummary ess(const Matrix& samples);

/// Unbiased sample covariance of the rows.
Matrix sample_covariance(const Matrix& samples);

/// Covariance of the row-wise concatenation of several sample blocks.
Matrix pooled_covariance(const std::vector<Matrix>& blocks);

/// ||C - C0||_F^2 / ||C0||_F^2. Throws if C0 is not SPD.
double relative_error_sq(const Matrix& cov, const Matrix& reference);

struct TracePoint {
  std::size_t samples_per_chain = 0;  // post-burn-in draws per chain
  std::size_t evaluations = 0;        // cumulative true-model runs at this point
  double wall_seconds = 0.0;
  double err_sq = 0.0;
};

/// Post-burn-in rows (burn_in + 1 .. steps) of a chain.
Matrix post_burn_in(const ChainOutput& chain, std::size_t burn_in);

/// Logarithmic grid of sample counts in [first, last], ~points_per_decade
/// per decade, always ending at `last`.
std::vector<std::size_t> log_grid(std::size_t first, std::size_t last,
                                  std::size_t points_per_decade = 10);

/// Running pooled error: at each grid value t, the covariance of the first t
/// post-burn-in draws of every chain against `reference`. Evaluations count
/// `extra_evaluations` (e.g. the initial design) plus each chain's
/// cumulative model runs; wall time is the latest chain's timestamp.
std::vector<TracePoint> covariance_error_trace(const std::vector<ChainOutput>& chains,
                                               const Matrix& reference, std::size_t burn_in,
                                               std::size_t extra_evaluations = 0,
                                               std::size_t points_per_decade = 10);

/// Same values recomputed from scratch at every grid point (reference for tests).
std::vector<TracePoint> covariance_error_trace_direct(const std::vector<ChainOutput>& chains,
                                                      const Matrix& reference,
                                                      std::size_t burn_in,
                                                      std::size_t extra_evaluations = 0,
                                                      std::size_t points_per_decade = 10);

/// Least-squares slope of log(err_sq) against log(evaluations) over trace
/// points whose evaluation count lies in [lo, hi].
double log_log_slope(const std::vector<TracePoint>& trace, double lo, double hi);

/// Earliest wall time after which the pooled error of all post-burn-in draws
/// (merged in wall-clock order) never exceeds `threshold` again; +inf if the
/// final error is above it.
double time_to_threshold(const std::vector<ChainOutput>& chains, const Matrix& reference,
                         std::size_t burn_in, double threshold);

/// Sum of per-chain (min-coordinate) ESS divided by n_chains * hours.
double ess_per_chain_hour(const std::vector<ChainOutput>& chains, std::size_t burn_in,
                          double wall_seconds);

/// Covariance of the quartic density by high-resolution quadrature.
Matrix quartic_reference();

}  // namespace lamcmc::diagnostics
