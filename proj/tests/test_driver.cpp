#include "lamcmc/driver.hpp"
#include "lamcmc/targets.hpp"

#include <doctest.h>

#include <atomic>
#include <sstream>
#include <thread>

using namespace lamcmc;

namespace {

Vector v2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

KernelConfig la_config(ProposalFamily fam = ProposalFamily::am) {
  KernelConfig k;
  k.mode = Mode::local_approx;
  k.fit = LocalFitConfig::defaults(2);
  k.proposal.family = fam;
  return k;
}

}  // namespace

TEST_CASE("initial design") {
  SUBCASE("count sets the store size") {
    const auto problem = targets::quartic();
    SampleStore store(2, 1);
    Stream rng(1);
    CHECK(seed_initial_design(problem, 8, store, rng) == 8);
    CHECK(store.size() == 8);
  }
  SUBCASE("box prior keeps seeds inside") {
    const auto problem = TargetProblem::log_density(
        2, [](const Vector& x) { return Vector::Constant(1, -x.squaredNorm()); },
        Box{Vector::Zero(2), Vector::Ones(2)});
    SampleStore store(2, 1);
    Stream rng(2);
    seed_initial_design(problem, 50, store, rng);
    for (const auto& p : store.snapshot()) CHECK(problem.in_support(p.theta));
  }
  SUBCASE("Gaussian prior seeds centre on the prior mean") {
    Matrix cov(2, 2);
    cov << 4.0, 0.0, 0.0, 0.25;
    const auto problem = TargetProblem::forward(
        2, [](const Vector& x) { return Vector(x); }, Vector::Zero(2), Matrix::Identity(2, 2),
        GaussianPrior{v2(3, -1), cov});
    SampleStore store(2, 2);
    Stream rng(3);
    const std::size_t n = 400;
    seed_initial_design(problem, n, store, rng);
    Vector mean = Vector::Zero(2);
    for (const auto& p : store.snapshot()) mean += p.theta;
    mean /= static_cast<double>(store.size());
    CHECK(std::abs(mean(0) - 3.0) <= 4 * 2.0 / std::sqrt(double(n)));
    CHECK(std::abs(mean(1) + 1.0) <= 4 * 0.5 / std::sqrt(double(n)));
  }
}

TEST_CASE("zero steps gives only the start point") {
  const auto problem = targets::quartic();
  RunPlan plan;
  plan.steps = 0;
  plan.burn_in = 0;
  plan.initial_points = {v2(0.1, 0.2)};
  const auto res = run_parallel(plan, problem, la_config());
  REQUIRE(res.chains.size() == 1);
  CHECK(res.chains[0].samples.rows() == 1);
  CHECK(res.chains[0].samples.row(0).transpose() == v2(0.1, 0.2));
}

TEST_CASE("plan validation") {
  RunPlan plan;
  plan.steps = 10;
  plan.burn_in = 10;
  CHECK_THROWS_AS(plan.validate(), InvalidArgument);
  plan.burn_in = 1;
  plan.n_chains = 0;
  CHECK_THROWS_AS(plan.validate(), InvalidArgument);
  plan.n_chains = 2;
  plan.initial_points = {v2(0, 0)};
  CHECK_THROWS_AS(plan.validate(), InvalidArgument);

  RunPlan small;
  small.initial_design = 5;
  CHECK_THROWS_AS(run_parallel(small, targets::quartic(), la_config()), InvalidArgument);
}

TEST_CASE("single chain runs are reproducible and match run_chain") {
  const auto problem = targets::quartic();
  RunPlan plan;
  plan.steps = 2000;
  plan.burn_in = 200;
  plan.seed = 99;
  const auto cfg = la_config(ProposalFamily::mmala);
  KernelConfig tuned = cfg;
  tuned.proposal.step_size = 4.0;
  tuned.proposal.hessian_floor = 5.0;

  const auto a = run_parallel(plan, problem, tuned);
  const auto b = run_parallel(plan, problem, tuned);
  CHECK(a.chains[0].samples == b.chains[0].samples);
  CHECK(a.chains[0].cum_model_evals == b.chains[0].cum_model_evals);
  CHECK(a.store->size() == b.store->size());

  SampleStore store(2, 1);
  Stream rng = substream(99, std::numeric_limits<std::uint64_t>::max(), 0, Slot::initialization);
  seed_initial_design(problem, tuned.fit.n_points + 2, store, rng);
  const auto c = run_chain(plan, 0, &store, problem, tuned);
  CHECK(c.samples == a.chains[0].samples);
  CHECK(store.size() == a.store->size());
}

TEST_CASE("parallel chains share one store") {
  const auto problem = targets::quartic();
  RunPlan plan;
  plan.n_chains = 4;
  plan.steps = 3000;
  plan.burn_in = 300;
  plan.seed = 5;
  const auto res = run_parallel(plan, problem, la_config());
  REQUIRE(res.chains.size() == 4);

  std::size_t inserted = res.design_inserted;
  for (const auto& c : res.chains) {
    inserted += c.stats.refinements - c.stats.dedup_rejections;
    CHECK(c.samples.rows() == 3001);
    for (std::size_t t = 1; t < c.cum_model_evals.size(); ++t)
      CHECK(c.cum_model_evals[t] >= c.cum_model_evals[t - 1]);
    CHECK(c.cum_model_evals.back() == c.stats.model_evals);
  }
  CHECK(res.store->size() == inserted);
  CHECK(res.store->size() >= res.design_inserted);
  CHECK(res.total_model_evaluations() == res.design_evaluations + [&] {
          std::size_t n = 0;
          for (const auto& c : res.chains) n += c.stats.refinements;
          return n;
        }());
}

TEST_CASE("a chain with refinement disabled rides on another chain's refinements") {
  const auto problem = targets::quartic();
  SampleStore store(2, 1);
  Stream rng(4);
  const auto refining = la_config();
  seed_initial_design(problem, refining.fit.n_points + 2, store, rng);
  KernelConfig passive = refining;
  passive.policy = RefinementPolicy::disabled();

  RunPlan plan;
  plan.steps = 20000;
  plan.burn_in = 2000;
  plan.seed = 12;
  std::atomic<bool> done{false};
  std::vector<std::size_t> sizes;
  ChainOutput active_out, passive_out;
  RunPlan longer = plan;
  longer.steps = 60000;
  std::thread active([&] {
    active_out = run_chain(longer, 0, &store, problem, refining);
    done = true;
  });
  std::thread monitor([&] {
    while (!done) {
      sizes.push_back(store.size());
      std::this_thread::sleep_for(std::chrono::microseconds(200));
    }
  });
  while (store.size() < 200 && !done) std::this_thread::sleep_for(std::chrono::microseconds(100));
  passive_out = run_chain(plan, 1, &store, problem, passive);
  active.join();
  monitor.join();

  CHECK(passive_out.stats.random_refinements == 0);
  CHECK(passive_out.stats.cv_refinements == 0);
  CHECK(passive_out.stats.refinements == passive_out.stats.conditioning_refinements);
  CHECK(active_out.stats.refinements > 0);
  for (std::size_t i = 1; i < sizes.size(); ++i) CHECK(sizes[i] >= sizes[i - 1]);
  // The passive chain still samples the target reasonably.
  const Matrix post = passive_out.samples.bottomRows(18000);
  const Eigen::RowVectorXd mean = post.colwise().mean();
  const Matrix centered = post.rowwise() - mean;
  const Matrix cov = centered.transpose() * centered / double(post.rows() - 1);
  CHECK(cov(0, 0) == doctest::Approx(0.338).epsilon(0.3));
  CHECK(cov(1, 1) == doctest::Approx(0.284).epsilon(0.3));
}

TEST_CASE("a failing model aborts the whole run and names the chain") {
  std::atomic<int> calls{0};
  const auto problem = TargetProblem::log_density(
      2,
      [&calls](const Vector& x) {
        if (++calls > 40) return Vector::Constant(1, std::nan(""));
        return Vector::Constant(1, targets::quartic_log_density(x));
      },
      GaussianPrior{Vector::Zero(2), Matrix::Identity(2, 2)});
  RunPlan plan;
  plan.n_chains = 3;
  plan.steps = 100000;
  plan.burn_in = 10;
  try {
    run_parallel(plan, problem, la_config());
    FAIL("expected an abort");
  } catch (const ChainAborted& e) {
    CHECK(e.chain() < 3);
    CHECK(std::string(e.what()).find("non-finite") != std::string::npos);
  }
}

TEST_CASE("exact runs evaluate once per step per chain") {
  const auto problem = targets::quartic();
  RunPlan plan;
  plan.mode = Mode::exact;
  plan.n_chains = 2;
  plan.steps = 500;
  plan.burn_in = 50;
  KernelConfig cfg = la_config();
  cfg.mode = Mode::exact;
  const std::size_t fits = local_fit_count();
  const auto res = run_parallel(plan, problem, cfg);
  CHECK(local_fit_count() == fits);
  CHECK(res.store == nullptr);
  CHECK(res.total_model_evaluations() == 2 * 501);
  for (const auto& c : res.chains) CHECK(c.cum_model_evals.back() == 501);
}

TEST_CASE("trajectory csv") {
  ChainOutput c;
  c.samples = Matrix(2, 2);
  c.samples << 0.1, 0.2, 1.0 / 3.0, -2.0;
  c.accepted = {0, 1};
  c.refinements = {0, 2};
  c.cum_model_evals = {0, 2};
  c.wall_seconds = {0, 0};
  std::ostringstream os;
  write_trajectory_csv(os, c);
  CHECK(os.str() ==
        "t,theta_0,theta_1,accepted,n_refine,cum_model_evals\n"
        "0,0.10000000000000001,0.20000000000000001,0,0,0\n"
        "1,0.33333333333333331,-2,1,2,2\n");
}
