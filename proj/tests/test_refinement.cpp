#include "lamcmc/refinement.hpp"
#include "lamcmc/targets.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>

using namespace lamcmc;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }
Vector v2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

Box unit_box(std::size_t d) {
  return Box{Vector::Zero(static_cast<Eigen::Index>(d)), Vector::Ones(static_cast<Eigen::Index>(d))};
}

TargetProblem box_problem(std::size_t d, ModelFn f) {
  return TargetProblem::log_density(d, std::move(f), unit_box(d));
}

// Store filled with exact values of a Gaussian log density (offset added).
void fill_gaussian(SampleStore& store, const Matrix& cov, double offset, std::size_t n, Stream& rng) {
  const Matrix prec = cov.inverse();
  for (std::size_t i = 0; i < n; ++i) {
    const Vector x = 1.5 * rng.standard_normal(store.dim_in());
    store.insert(x, v1(-0.5 * x.dot(prec * x) + offset));
  }
}

}  // namespace

TEST_CASE("schedules") {
  const RefinementPolicy p;
  auto s = schedules(p, 1);
  CHECK(s.beta == doctest::Approx(0.01));
  CHECK(s.gamma == doctest::Approx(0.1));
  s = schedules(p, 100000);
  CHECK(s.beta == doctest::Approx(0.001).epsilon(1e-12));
  CHECK(s.gamma == doctest::Approx(0.1 * std::pow(1e5, -0.1)));
  RefinementPolicy cv_only;
  cv_only.beta_scale = 0.0;
  CHECK(schedules(cv_only, 7).beta == 0.0);
  RefinementPolicy big;
  big.beta_scale = 5.0;
  CHECK(schedules(big, 1).beta == 1.0);
  CHECK_THROWS_AS(schedules(p, 0), InvalidArgument);

  // Expected random refinements grow like 0.0125 T^0.8.
  double sum = 0.0;
  const std::size_t T = 1000000;
  for (std::size_t t = 1; t <= T; ++t) sum += schedules(p, t).beta;
  CHECK(sum == doctest::Approx(0.0125 * std::pow(double(T), 0.8)).epsilon(0.01));
}

TEST_CASE("policy validation") {
  RefinementPolicy p;
  p.beta_exp = 1.0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  p = RefinementPolicy{};
  p.max_refinements_per_step = 0;
  CHECK_THROWS_AS(p.validate(), InvalidArgument);
  CHECK_NOTHROW(RefinementPolicy::disabled().validate());
}

TEST_CASE("cv_error formula") {
  const double half = std::log(0.5);
  const std::vector<double> one{half};
  CHECK(cv_error(0.0, one) == doctest::Approx(0.5));
  const std::vector<double> same{0.0, 0.0};
  CHECK(cv_error(0.0, same) == 0.0);
  // zeta = 2 vs zeta_j = 0.5: |1 - 0.5| + |0.5 - 1| = 1
  const std::vector<double> flipped{half};
  CHECK(cv_error(std::log(2.0), flipped) == doctest::Approx(1.0));
  // zero ratio on one side
  const std::vector<double> zero{-std::numeric_limits<double>::infinity()};
  CHECK(cv_error(0.0, zero) == doctest::Approx(1.0));
  const std::vector<double> inf{std::numeric_limits<double>::infinity()};
  CHECK(cv_error(-std::numeric_limits<double>::infinity(), inf) == doctest::Approx(2.0));
}

TEST_CASE("indicators vanish on an exactly quadratic log density") {
  Matrix cov(2, 2);
  cov << 1.0, 0.3, 0.3, 0.5;
  const auto problem = targets::gaussian(cov);
  Stream rng(3);
  SampleStore store(2, 1);
  fill_gaussian(store, cov, 0.0, 30, rng);
  const auto cfg = LocalFitConfig::defaults(2);
  for (ProposalFamily fam : {ProposalFamily::am, ProposalFamily::mala, ProposalFamily::mmala}) {
    ProposalSpec spec;
    spec.family = fam;
    spec.step_size = 0.5;
    for (int k = 0; k < 5; ++k) {
      const Vector a = 0.7 * rng.standard_normal(2), b = 0.7 * rng.standard_normal(2);
      const auto cv = cv_indicators(a, b, store, problem, spec, cfg);
      CHECK(cv.eps_minus <= 1e-8);
      CHECK(cv.eps_plus <= 1e-8);
    }
  }
}

TEST_CASE("indicators are bounded and invariant to a constant offset") {
  const auto problem = targets::quartic();
  Stream rng(9);
  SampleStore a(2, 1), b(2, 1);
  for (int i = 0; i < 25; ++i) {
    const Vector x = rng.standard_normal(2);
    const double f = targets::quartic_log_density(x);
    a.insert(x, v1(f));
    b.insert(x, v1(f + 123.0));
  }
  const auto cfg = LocalFitConfig::defaults(2);
  ProposalSpec spec;
  spec.family = ProposalFamily::mmala;
  spec.step_size = 0.5;
  for (int k = 0; k < 5; ++k) {
    const Vector m = 0.5 * rng.standard_normal(2), p = 0.5 * rng.standard_normal(2);
    const auto ca = cv_indicators(m, p, a, problem, spec, cfg);
    const auto cb = cv_indicators(m, p, b, problem, spec, cfg);
    CHECK(ca.eps_plus >= 0.0);
    CHECK(ca.eps_plus <= 2.0);
    CHECK(ca.eps_minus >= 0.0);
    CHECK(ca.eps_minus <= 2.0);
    CHECK(cb.eps_plus == doctest::Approx(ca.eps_plus).epsilon(1e-6));
    CHECK(cb.eps_minus == doctest::Approx(ca.eps_minus).epsilon(1e-6));
    CHECK(cb.log_zeta == doctest::Approx(ca.log_zeta).epsilon(1e-6));
  }
}

TEST_CASE("maximin point in one dimension") {
  SampleStore store(1, 1);
  store.insert(v1(0), v1(0));
  store.insert(v1(1), v1(0));
  Stream rng(1);
  double radius = 0;
  const Vector best = maximin_candidate(v1(0), store, 2, 200, unit_box(1), rng, &radius);
  CHECK(radius == doctest::Approx(1.0));
  CHECK(std::abs(best(0) - 0.5) <= 0.05);
}

TEST_CASE("refining at a lone stored point moves away from it") {
  const auto problem = box_problem(2, [](const Vector& x) { return v1(-x.squaredNorm()); });
  SampleStore store(2, 1);
  store.insert(v2(0.5, 0.5), v1(0));
  store.insert(v2(0.9, 0.9), v1(0));
  auto cfg = LocalFitConfig::defaults(2);
  cfg.n_points = 2;
  Stream rng(2);
  const auto res = refine_near(v2(0.5, 0.5), store, problem, cfg, RefinementPolicy{}, rng);
  CHECK(res.inserted);
  CHECK((res.theta - v2(0.5, 0.5)).norm() > 0.0);
  CHECK(store.size() == 3);
}

TEST_CASE("maximin lands in a gap, close to the grid optimum") {
  SampleStore store(2, 1);
  const Vector theta = v2(0.5, 0.5);
  for (int i = 0; i <= 20; ++i)
    for (int j = 0; j <= 20; ++j) {
      const Vector x = v2(i / 20.0, j / 20.0);
      if ((x - v2(0.62, 0.55)).norm() < 0.18) continue;
      store.insert(x, v1(0));
    }
  const std::size_t k = 40;
  const double radius = store.nearest_k(theta, k).radius;
  auto objective = [&](const Vector& c) { return store.min_distances({c})[0]; };

  double grid_best = 0.0;
  for (int i = 0; i <= 400; ++i)
    for (int j = 0; j <= 400; ++j) {
      const Vector c = theta + radius * v2(-1 + i / 200.0, -1 + j / 200.0);
      if ((c - theta).norm() <= radius) grid_best = std::max(grid_best, objective(c));
    }
  Stream rng(4);
  const Vector best = maximin_candidate(theta, store, k, 400, unit_box(2), rng);
  CHECK((best - theta).norm() <= radius + 1e-12);
  CHECK(objective(best) >= 0.85 * grid_best);
  CHECK((best - v2(0.62, 0.55)).norm() < 0.18);
}

TEST_CASE("refined points stay within the neighbour radius and the support") {
  const auto problem = box_problem(2, [](const Vector& x) { return v1(x.sum()); });
  Stream rng(6);
  SampleStore store(2, 1);
  for (int i = 0; i < 12; ++i) store.insert(v2(rng.uniform(), rng.uniform()), v1(0));
  const auto cfg = LocalFitConfig::defaults(2);
  for (int k = 0; k < 30; ++k) {
    const Vector theta = v2(rng.uniform(), rng.uniform());
    const double radius = store.nearest_k(theta, cfg.n_points).radius;
    Stream r = substream(1, 0, k, Slot::maximin);
    const auto res = refine_near(theta, store, problem, cfg, RefinementPolicy{}, r);
    CHECK((res.theta - theta).norm() <= radius + 1e-12);
    CHECK(problem.in_support(res.theta));
  }
}

TEST_CASE("model failure during refinement surfaces the point and inserts nothing") {
  const auto problem = box_problem(1, [](const Vector&) { return v1(std::nan("")); });
  SampleStore store(1, 1);
  store.insert(v1(0.2), v1(0));
  store.insert(v1(0.8), v1(0));
  auto cfg = LocalFitConfig::defaults(1);
  cfg.n_points = 2;
  Stream rng(1);
  try {
    refine_near(v1(0.5), store, problem, cfg, RefinementPolicy{}, rng);
    FAIL("expected ModelError");
  } catch (const ModelError& e) {
    CHECK(e.theta().size() == 1);
    CHECK(std::abs(e.theta()(0) - 0.5) <= 0.6);
  }
  CHECK(store.size() == 2);
}

TEST_CASE("decide branches") {
  RefinementPolicy p;
  p.gamma_scale = 0.2;
  p.gamma_exp = 0.0;
  CHECK(decide(p, 1, 0.0, 0.0, 0.5, 0.3) == RefineAction::none);
  CHECK(decide(p, 1, 0.0, 0.0, 0.005, 0.3) == RefineAction::near_minus);
  CHECK(decide(p, 1, 0.0, 0.0, 0.005, 0.7) == RefineAction::near_plus);
  CHECK(decide(p, 1, 0.1, 0.3, 0.5, 0.3) == RefineAction::near_plus);
  CHECK(decide(p, 1, 0.3, 0.1, 0.5, 0.3) == RefineAction::near_minus);
  CHECK(decide(p, 1, 0.25, 0.25, 0.5, 0.3) == RefineAction::near_plus);
  CHECK(decide(p, 1, 0.15, 0.1, 0.5, 0.3) == RefineAction::none);
  CHECK(decide(RefinementPolicy::disabled(), 1, 2.0, 2.0, 0.0, 0.0) == RefineAction::none);
}
