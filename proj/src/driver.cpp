#include "lamcmc/driver.hpp"

#include <omp.h>

#include <exception>
#include <limits>
#include <ostream>

namespace lamcmc {
namespace {

constexpr std::uint64_t kDesignChain = std::numeric_limits<std::uint64_t>::max();

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

void RunPlan::validate() const {
  if (n_chains < 1) throw InvalidArgument("run plan: n_chains must be at least 1");
  if (steps > 0 && burn_in >= steps) throw InvalidArgument("run plan: burn_in must be below steps");
  if (!initial_points.empty() && initial_points.size() != n_chains)
    throw InvalidArgument("run plan: need one initial point per chain");
}

std::size_t RunResult::total_model_evaluations() const {
  std::size_t n = design_evaluations;
  for (const auto& c : chains) n += c.stats.model_evals + c.stats.initial_evals;
  return n;
}

std::size_t seed_initial_design(const TargetProblem& problem, std::size_t count, SampleStore& store,
                                Stream& rng) {
  if (count == 0) throw InvalidArgument("seed_initial_design: count must be positive");
  std::size_t inserted = 0;
  std::size_t drawn = 0;
  while (drawn < count) {
    const Vector theta = problem.sample_prior(rng);
    if (!problem.in_support(theta)) continue;
    ++drawn;
    if (store.insert(theta, problem.evaluate(theta)).inserted) ++inserted;
  }
  return inserted;
}

Vector chain_start(const RunPlan& plan, std::size_t chain, const TargetProblem& problem) {
  if (!plan.initial_points.empty()) return plan.initial_points.at(chain);
  Stream rng = substream(plan.seed, chain, 0, Slot::initialization);
  for (int attempt = 0; attempt < 10000; ++attempt) {
    Vector theta = problem.sample_prior(rng);
    if (problem.in_support(theta)) return theta;
  }
  throw InvalidArgument("chain_start: could not draw a start point inside the support");
}

ChainOutput run_chain(const RunPlan& plan, std::size_t chain, SampleStore* store,
                      const TargetProblem& problem, const KernelConfig& config,
                      const std::atomic<bool>* cancel,
                      std::optional<std::chrono::steady_clock::time_point> t0) {
  const auto origin = t0.value_or(std::chrono::steady_clock::now());
  const std::size_t d = problem.dim();
  const std::size_t rows = plan.steps + 1;

  ChainOutput out;
  out.chain = chain;
  out.samples.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d));
  out.accepted.assign(rows, 0);
  out.refinements.assign(rows, 0);
  out.cum_model_evals.assign(rows, 0);
  out.wall_seconds.assign(rows, 0.0);

  ChainState state = make_chain_state(chain_start(plan, chain, problem), plan.seed, chain, problem, config);
  out.samples.row(0) = state.theta.transpose();
  out.cum_model_evals[0] = state.stats.initial_evals;
  out.wall_seconds[0] = seconds_since(origin);

  for (std::size_t t = 1; t < rows; ++t) {
    if (cancel && cancel->load(std::memory_order_relaxed)) throw std::runtime_error("cancelled");
    const StepRecord rec = transition_step(state, store, problem, config);
    out.samples.row(static_cast<Eigen::Index>(t)) = state.theta.transpose();
    out.accepted[t] = rec.accepted ? 1 : 0;
    out.refinements[t] = static_cast<std::uint32_t>(rec.refinements);
    out.cum_model_evals[t] = state.stats.model_evals + state.stats.initial_evals;
    out.wall_seconds[t] = seconds_since(origin);
  }
  out.stats = state.stats;
  return out;
}

RunResult run_parallel(const RunPlan& plan, const TargetProblem& problem,
                       const KernelConfig& config) {
  plan.validate();
  config.validate();
  if (config.fit.dim != problem.dim())
    throw InvalidArgument("run_parallel: fit configuration dimension does not match the problem");

  RunResult result;
  const auto t0 = std::chrono::steady_clock::now();
  if (plan.mode == Mode::local_approx) {
    const std::size_t minimum = config.fit.n_points + 2;
    const std::size_t count = plan.initial_design == 0 ? minimum : plan.initial_design;
    if (count < minimum)
      throw InvalidArgument("run_parallel: initial design needs at least N + 2 = " +
                            std::to_string(minimum) + " points");
    result.store = std::make_shared<SampleStore>(problem.dim(), problem.output_dim());
    Stream rng = substream(plan.seed, kDesignChain, 0, Slot::initialization);
    result.design_evaluations = count;
    result.design_inserted = seed_initial_design(problem, count, *result.store, rng);
    if (result.store->size() < config.fit.n_points + 1)
      throw InvalidArgument("run_parallel: initial design collapsed below N + 1 distinct points");
  }

  const std::size_t n = plan.n_chains;
  result.chains.resize(n);
  std::vector<std::exception_ptr> errors(n);
  std::atomic<bool> cancel{false};
  SampleStore* store = result.store.get();

  if (n == 1) {
    try {
      result.chains[0] = run_chain(plan, 0, store, problem, config, &cancel, t0);
    } catch (...) {
      errors[0] = std::current_exception();
    }
  } else {
    const int dynamic = omp_get_dynamic();
    omp_set_dynamic(0);
#pragma omp parallel for num_threads(static_cast<int>(n)) schedule(static, 1)
    for (std::size_t i = 0; i < n; ++i) {
      try {
        result.chains[i] = run_chain(plan, i, store, problem, config, &cancel, t0);
      } catch (...) {
        errors[i] = std::current_exception();
        cancel.store(true);
      }
    }
    omp_set_dynamic(dynamic);
  }
  result.wall_seconds = seconds_since(t0);

  // Report the root cause, not the chains that merely observed cancellation.
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < n; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      if (std::string(e.what()) != "cancelled" || !first) first = i;
      if (std::string(e.what()) != "cancelled") break;
    }
  }
  if (first) {
    try {
      std::rethrow_exception(errors[*first]);
    } catch (const std::exception& e) {
      throw ChainAborted(*first, e.what());
    }
  }
  return result;
}

void write_trajectory_csv(std::ostream& os, const ChainOutput& chain) {
  const auto d = chain.samples.cols();
  const auto old_precision = os.precision(17);
  os << "t";
  for (Eigen::Index j = 0; j < d; ++j) os << ",theta_" << j;
  os << ",accepted,n_refine,cum_model_evals\n";
  for (Eigen::Index t = 0; t < chain.samples.rows(); ++t) {
    os << t;
    for (Eigen::Index j = 0; j < d; ++j) os << ',' << chain.samples(t, j);
    const auto r = static_cast<std::size_t>(t);
    os << ',' << int(chain.accepted[r]) << ',' << chain.refinements[r] << ','
       << chain.cum_model_evals[r] << '\n';
  }
  os.precision(old_precision);
}

}  // namespace lamcmc
