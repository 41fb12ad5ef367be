#include "lamcmc/diagnostics.hpp"
#include "lamcmc/random.hpp"

#include <doctest.h>

#include <cmath>

using namespace lamcmc;
using namespace lamcmc::diagnostics;

namespace {

std::vector<double> ar1(std::size_t n, double rho, std::uint64_t seed) {
  Stream rng(seed);
  const Vector e = rng.standard_normal(n);
  std::vector<double> x(n);
  x[0] = e(0) / std::sqrt(1 - rho * rho);
  for (std::size_t i = 1; i < n; ++i) x[i] = rho * x[i - 1] + e(static_cast<Eigen::Index>(i));
  return x;
}

ChainOutput chain_from(const Matrix& samples, std::size_t evals_per_step = 1) {
  ChainOutput c;
  c.samples = samples;
  const auto n = static_cast<std::size_t>(samples.rows());
  c.accepted.assign(n, 1);
  c.refinements.assign(n, 0);
  c.cum_model_evals.resize(n);
  c.wall_seconds.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    c.cum_model_evals[i] = i * evals_per_step;
    c.wall_seconds[i] = 1e-3 * static_cast<double>(i);
  }
  return c;
}

Matrix gaussian_draws(const Matrix& cov, std::size_t n, std::uint64_t seed) {
  Stream rng(seed);
  const Matrix l = cov.llt().matrixL();
  Matrix out(static_cast<Eigen::Index>(n), cov.rows());
  for (std::size_t i = 0; i < n; ++i)
    out.row(static_cast<Eigen::Index>(i)) = (l * rng.standard_normal(static_cast<std::size_t>(cov.rows()))).transpose();
  return out;
}

}  // namespace

TEST_CASE("ESS of white noise, AR(1) and constant chains") {
  Stream rng(1);
  const Vector w = rng.standard_normal(10000);
  const double e = ess(std::span<const double>(w.data(), 10000));
  CHECK(e >= 8000);
  CHECK(e <= 10000);

  const auto x = ar1(100000, 0.9, 2);
  CHECK(ess(x) == doctest::Approx(100000.0 / 19.0).epsilon(0.2));

  const std::vector<double> flat(500, 3.0);
  CHECK(ess(flat) == 1.0);

  const std::vector<double> short_chain(99, 0.0);
  CHECK_THROWS_AS(ess(short_chain), InvalidArgument);

  // Affine rescaling leaves ESS unchanged.
  std::vector<double> scaled(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) scaled[i] = -7.0 * x[i] + 100.0;
  CHECK(ess(scaled) == doctest::Approx(ess(x)).epsilon(1e-6));

  // Antithetic chains are capped at the chain length.
  std::vector<double> alt(1000);
  for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = (i % 2 ? 1.0 : -1.0) + 0.01 * w(static_cast<Eigen::Index>(i));
  const double ea = ess(alt);
  CHECK(ea > 0);
  CHECK(ea <= 1000);
}

TEST_CASE("ESS matrix summary") {
  Matrix m(5000, 2);
  const auto a = ar1(5000, 0.5, 3), b = ar1(5000, 0.95, 4);
  for (int i = 0; i < 5000; ++i) m.row(i) << a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(i)];
  const auto s = ess(m);
  CHECK(s.per_coordinate.size() == 2);
  CHECK(s.min == s.per_coordinate(1));
  CHECK(s.per_coordinate(0) > s.per_coordinate(1));
}

TEST_CASE("relative covariance error") {
  Matrix c0(2, 2);
  c0 << 0.5, 0.1, 0.1, 0.3;
  CHECK(relative_error_sq(c0, c0) == 0.0);
  CHECK(relative_error_sq(2 * c0, c0) == doctest::Approx(1.0));
  Matrix singular(2, 2);
  singular << 1, 1, 1, 1;
  CHECK_THROWS_AS(relative_error_sq(c0, singular), InvalidArgument);

  const Matrix draws = gaussian_draws(c0, 100000, 5);
  CHECK(relative_error_sq(sample_covariance(draws), c0) <= 0.01);
}

TEST_CASE("pooled covariance equals the concatenated sample covariance") {
  Matrix c0 = Matrix::Identity(3, 3);
  const Matrix a = gaussian_draws(c0, 300, 1), b = gaussian_draws(c0, 500, 2) .array() + 1.0;
  Matrix all(800, 3);
  all << a, b;
  CHECK((pooled_covariance({a, b}) - sample_covariance(all)).norm() <= 1e-12);
}

TEST_CASE("incremental error trace equals recomputation") {
  Matrix c0(2, 2);
  c0 << 1.0, 0.3, 0.3, 0.5;
  std::vector<ChainOutput> chains;
  for (int c = 0; c < 3; ++c) chains.push_back(chain_from(gaussian_draws(c0, 5001, 10 + c), 2));
  const auto inc = covariance_error_trace(chains, c0, 100, 7);
  const auto ref = covariance_error_trace_direct(chains, c0, 100, 7);
  REQUIRE(inc.size() == ref.size());
  REQUIRE(inc.size() > 10);
  for (std::size_t i = 0; i < inc.size(); ++i) {
    CHECK(inc[i].samples_per_chain == ref[i].samples_per_chain);
    CHECK(inc[i].evaluations == ref[i].evaluations);
    CHECK(std::abs(inc[i].err_sq - ref[i].err_sq) <= 1e-12 * std::max(1.0, ref[i].err_sq));
  }
  CHECK(inc.back().samples_per_chain == 4900);
  CHECK(inc.back().evaluations == 7 + 3 * 2 * 5000);
  CHECK(inc.back().err_sq <= 0.01);
}

TEST_CASE("log grid and slope") {
  const auto g = log_grid(1, 1000, 10);
  CHECK(g.front() == 1);
  CHECK(g.back() == 1000);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);

  std::vector<TracePoint> trace;
  for (std::size_t n : log_grid(10, 100000)) trace.push_back({n, n, 0.0, 3.0 / static_cast<double>(n)});
  CHECK(log_log_slope(trace, 1000, 100000) == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("time to threshold and ESS per chain-hour") {
  Matrix c0 = Matrix::Identity(2, 2);
  std::vector<ChainOutput> chains{chain_from(gaussian_draws(c0, 20001, 3))};
  const double t = time_to_threshold(chains, c0, 0, 0.05);
  CHECK(std::isfinite(t));
  CHECK(t > 0.0);
  CHECK(t <= chains[0].wall_seconds.back());
  CHECK(std::isinf(time_to_threshold(chains, 4.0 * c0, 0, 0.05)));

  const double per_hour = ess_per_chain_hour(chains, 0, 20.0);
  CHECK(per_hour == doctest::Approx(ess(post_burn_in(chains[0], 0)).min * 180.0));
}

TEST_CASE("quartic reference covariance") {
  const Matrix c = quartic_reference();
  const double var1 = std::tgamma(0.75) / std::tgamma(0.25);
  CHECK(std::abs(c(0, 0) - var1) <= 1e-6);
  CHECK(std::abs(c(1, 1) - (0.25 + (0.25 - var1 * var1) / 4.0)) <= 1e-6);
  CHECK(std::abs(c(0, 1)) <= 1e-10);
  CHECK(c(0, 0) == doctest::Approx(0.3380).epsilon(1e-3));
  CHECK(c(1, 1) == doctest::Approx(0.2839).epsilon(1e-3));
}
