#include "lamcmc/diagnostics.hpp"

#include "lamcmc/kernels.hpp"
#include "lamcmc/targets.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace lamcmc::diagnostics {
namespace {

constexpr std::size_t kLagBlock = 256;

/// Welford accumulator for a running mean and scatter matrix.
struct Running {
  std::size_t n = 0;
  Vector mean;
  Matrix m2;

  explicit Running(std::size_t d) : mean(Vector::Zero(d)), m2(Matrix::Zero(d, d)) {}

  void add(const Eigen::Ref<const Eigen::RowVectorXd>& x) {
    ++n;
    const Vector delta = x.transpose() - mean;
    mean += delta / static_cast<double>(n);
    m2.noalias() += delta * (x.transpose() - mean).transpose();
  }

  Matrix covariance() const { return m2 / static_cast<double>(n - 1); }
};

void check_reference(const Matrix& reference) {
  if (reference.rows() != reference.cols() || reference.rows() == 0)
    throw InvalidArgument("reference covariance must be square");
  Eigen::LLT<Matrix> llt(reference);
  if (llt.info() != Eigen::Success) throw InvalidArgument("reference covariance is not SPD");
}

std::size_t evals_at(const std::vector<ChainOutput>& chains, std::size_t row, std::size_t extra) {
  std::size_t e = extra;
  for (const auto& c : chains) e += c.cum_model_evals[row];
  return e;
}

double wall_at(const std::vector<ChainOutput>& chains, std::size_t row) {
  double w = 0.0;
  for (const auto& c : chains) w = std::max(w, c.wall_seconds[row]);
  return w;
}

std::size_t common_post_length(const std::vector<ChainOutput>& chains, std::size_t burn_in) {
  if (chains.empty()) throw InvalidArgument("no chains");
  std::size_t rows = static_cast<std::size_t>(chains.front().samples.rows());
  for (const auto& c : chains) rows = std::min(rows, static_cast<std::size_t>(c.samples.rows()));
  if (rows <= burn_in + 1) throw InvalidArgument("no samples after burn-in");
  return rows - burn_in - 1;
}

}  // namespace

double ess(std::span<const double> series) {
  const std::size_t n = series.size();
  if (n < 100) throw InvalidArgument("ess: need at least 100 samples");
  const double mean = std::accumulate(series.begin(), series.end(), 0.0) / static_cast<double>(n);
  std::vector<double> centered(n);
  for (std::size_t i = 0; i < n; ++i) centered[i] = series[i] - mean;

  double gamma0 = 0.0;
  kernels::autocovariance(centered, 0, std::span<double>(&gamma0, 1));
  if (!(gamma0 > 0.0)) return 1.0;

  // tau = -1 + 2 * sum_m (rho_2m + rho_2m+1) while the pair sums stay positive.
  double pair_sum = 0.0;
  std::vector<double> block(kLagBlock);
  std::size_t lag = 0;
  bool done = false;
  while (!done && lag < n) {
    kernels::autocovariance(centered, lag, block);
    for (std::size_t k = 0; k + 1 < kLagBlock; k += 2) {
      const double pair = (block[k] + block[k + 1]) / gamma0;
      if (!(pair > 0.0) || lag + k + 1 >= n) {
        done = true;
        break;
      }
      pair_sum += pair;
    }
    lag += kLagBlock;
  }
  const double tau = -1.0 + 2.0 * pair_sum;
  const double nd = static_cast<double>(n);
  if (!(tau > 0.0)) return nd;
  return std::clamp(nd / tau, std::numeric_limits<double>::min(), nd);
}

EssSummary ess(const Matrix& samples) {
  EssSummary s;
  s.per_coordinate.resize(samples.cols());
  std::vector<double> col(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    for (Eigen::Index i = 0; i < samples.rows(); ++i) col[static_cast<std::size_t>(i)] = samples(i, j);
    s.per_coordinate(j) = ess(col);
  }
  s.min = s.per_coordinate.minCoeff();
  return s;
}

Matrix sample_covariance(const Matrix& samples) {
  if (samples.rows() < 2) throw InvalidArgument("sample_covariance: need at least 2 rows");
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const Matrix centered = samples.rowwise() - mean;
  return centered.transpose() * centered / static_cast<double>(samples.rows() - 1);
}

Matrix pooled_covariance(const std::vector<Matrix>& blocks) {
  if (blocks.empty()) throw InvalidArgument("pooled_covariance: no blocks");
  Running acc(static_cast<std::size_t>(blocks.front().cols()));
  for (const auto& b : blocks)
    for (Eigen::Index i = 0; i < b.rows(); ++i) acc.add(b.row(i));
  if (acc.n < 2) throw InvalidArgument("pooled_covariance: need at least 2 rows");
  return acc.covariance();
}

double relative_error_sq(const Matrix& cov, const Matrix& reference) {
  check_reference(reference);
  return (cov - reference).squaredNorm() / reference.squaredNorm();
}

Matrix post_burn_in(const ChainOutput& chain, std::size_t burn_in) {
  const auto rows = chain.samples.rows();
  const auto start = static_cast<Eigen::Index>(burn_in + 1);
  if (start >= rows) throw InvalidArgument("post_burn_in: burn-in covers the whole chain");
  return chain.samples.bottomRows(rows - start);
}

std::vector<std::size_t> log_grid(std::size_t first, std::size_t last,
                                  std::size_t points_per_decade) {
  std::vector<std::size_t> grid;
  if (first > last || first == 0) return grid;
  const double step = std::pow(10.0, 1.0 / static_cast<double>(points_per_decade));
  double x = static_cast<double>(first);
  while (static_cast<std::size_t>(std::llround(x)) < last) {
    const auto v = static_cast<std::size_t>(std::llround(x));
    if (grid.empty() || v > grid.back()) grid.push_back(v);
    x *= step;
  }
  grid.push_back(last);
  return grid;
}

std::vector<TracePoint> covariance_error_trace(const std::vector<ChainOutput>& chains,
                                               const Matrix& reference, std::size_t burn_in,
                                               std::size_t extra_evaluations,
                                               std::size_t points_per_decade) {
  check_reference(reference);
  const std::size_t len = common_post_length(chains, burn_in);
  const std::size_t d = static_cast<std::size_t>(reference.rows());
  const std::size_t first = std::max<std::size_t>(1, (d + 1 + chains.size() - 1) / chains.size());
  const auto grid = log_grid(first, len, points_per_decade);

  Running acc(d);
  std::vector<TracePoint> trace;
  std::size_t t = 0;
  for (std::size_t g : grid) {
    for (; t < g; ++t)
      for (const auto& c : chains) acc.add(c.samples.row(static_cast<Eigen::Index>(burn_in + 1 + t)));
    const std::size_t row = burn_in + g;
    trace.push_back({g, evals_at(chains, row, extra_evaluations), wall_at(chains, row),
                     relative_error_sq(acc.covariance(), reference)});
  }
  return trace;
}

std::vector<TracePoint> covariance_error_trace_direct(const std::vector<ChainOutput>& chains,
                                                      const Matrix& reference,
                                                      std::size_t burn_in,
                                                      std::size_t extra_evaluations,
                                                      std::size_t points_per_decade) {
  check_reference(reference);
  const std::size_t len = common_post_length(chains, burn_in);
  const std::size_t d = static_cast<std::size_t>(reference.rows());
  const std::size_t first = std::max<std::size_t>(1, (d + 1 + chains.size() - 1) / chains.size());
  std::vector<TracePoint> trace;
  for (std::size_t g : log_grid(first, len, points_per_decade)) {
    Matrix all(static_cast<Eigen::Index>(g * chains.size()), static_cast<Eigen::Index>(d));
    for (std::size_t c = 0; c < chains.size(); ++c)
      all.middleRows(static_cast<Eigen::Index>(c * g), static_cast<Eigen::Index>(g)) =
          chains[c].samples.middleRows(static_cast<Eigen::Index>(burn_in + 1),
                                       static_cast<Eigen::Index>(g));
    const std::size_t row = burn_in + g;
    trace.push_back({g, evals_at(chains, row, extra_evaluations), wall_at(chains, row),
                     relative_error_sq(sample_covariance(all), reference)});
  }
  return trace;
}

double log_log_slope(const std::vector<TracePoint>& trace, double lo, double hi) {
  std::vector<double> xs, ys;
  for (const auto& p : trace) {
    const double e = static_cast<double>(p.evaluations);
    if (e < lo || e > hi || !(p.err_sq > 0.0)) continue;
    xs.push_back(std::log(e));
    ys.push_back(std::log(p.err_sq));
  }
  if (xs.size() < 2) throw InvalidArgument("log_log_slope: fewer than two points in range");
  const double n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

double time_to_threshold(const std::vector<ChainOutput>& chains, const Matrix& reference,
                         std::size_t burn_in, double threshold) {
  check_reference(reference);
  struct Draw {
    double wall;
    std::size_t chain;
    std::size_t row;
  };
  std::vector<Draw> draws;
  for (std::size_t c = 0; c < chains.size(); ++c)
    for (std::size_t r = burn_in + 1; r < static_cast<std::size_t>(chains[c].samples.rows()); ++r)
      draws.push_back({chains[c].wall_seconds[r], c, r});
  std::stable_sort(draws.begin(), draws.end(),
                   [](const Draw& a, const Draw& b) { return a.wall < b.wall; });

  const std::size_t d = static_cast<std::size_t>(reference.rows());
  Running acc(d);
  double since = std::numeric_limits<double>::infinity();
  for (const auto& dr : draws) {
    acc.add(chains[dr.chain].samples.row(static_cast<Eigen::Index>(dr.row)));
    if (acc.n <= d) continue;
    const double err = relative_error_sq(acc.covariance(), reference);
    if (err > threshold)
      since = std::numeric_limits<double>::infinity();
    else if (!std::isfinite(since))
      since = dr.wall;
  }
  return since;
}

double ess_per_chain_hour(const std::vector<ChainOutput>& chains, std::size_t burn_in,
                          double wall_seconds) {
  if (chains.empty() || !(wall_seconds > 0.0))
    throw InvalidArgument("ess_per_chain_hour: need chains and a positive wall time");
  double total = 0.0;
  for (const auto& c : chains) total += ess(post_burn_in(c, burn_in)).min;
  return total / (static_cast<double>(chains.size()) * wall_seconds / 3600.0);
}

Matrix quartic_reference() {
  Box box{Vector(2), Vector(2)};
  box.lower << -3.5, -5.0;
  box.upper << 3.5, 10.0;
  return targets::quadrature_moments_2d(targets::quartic_log_density, box, 2001).cov;
}

}  // namespace lamcmc::diagnostics
