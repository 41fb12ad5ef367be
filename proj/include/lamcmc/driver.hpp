#pragma once

#include "lamcmc/kernel.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace lamcmc {

struct RunPlan {
  std::size_t n_chains = 1;
  std::size_t steps = 1000;
  std::size_t burn_in = 100;
  Mode mode = Mode::local_approx;
  std::uint64_t seed = 1;
  /// One start point per chain; empty means prior draws.
  std::vector<Vector> initial_points;
  /// Number of prior draws evaluated to seed the store (0: N + 2).
  std::size_t initial_design = 0;

  void validate() const;
};

struct ChainOutput {
  std::size_t chain = 0;
  Matrix samples;  // (steps + 1) x d, row 0 is the start point
  std::vector<std::uint8_t> accepted;           // per row; row 0 is 0
  std::vector<std::uint32_t> refinements;       // per row
  std::vector<std::uint64_t> cum_model_evals;   // per row, attributed to this chain
  std::vector<double> wall_seconds;             // per row, since the run started
  ChainStats stats;
};

struct RunResult {
  std::vector<ChainOutput> chains;
  std::shared_ptr<SampleStore> store;  // null for exact runs
  std::size_t design_evaluations = 0;
  std::size_t design_inserted = 0;
  double wall_seconds = 0.0;

  /// Initial design plus every model run made by the chains.
  std::size_t total_model_evaluations() const;
};

/// A chain failed; the run was cancelled.
class ChainAborted : public std::runtime_error {
 public:
  ChainAborted(std::size_t chain, const std::string& why)
      : std::runtime_error("chain " + std::to_string(chain) + " aborted: " + why), chain_(chain) {}
  std::size_t chain() const { return chain_; }

 private:
  std::size_t chain_;
};

/// Draws `count` points from the prior, evaluates the true model and inserts
/// them (coincident draws are deduplicated by the store). Returns the number
/// of points actually inserted.
std::size_t seed_initial_design(const TargetProblem& problem, std::size_t count, SampleStore& store,
                                Stream& rng);

/// The start point of a chain: plan.initial_points[chain] or a prior draw
/// inside the support.
Vector chain_start(const RunPlan& plan, std::size_t chain, const TargetProblem& problem);

/// Runs one chain for plan.steps transitions. `cancel` is polled between
/// steps; `t0` is the common time origin for wall-clock stamps.
ChainOutput run_chain(const RunPlan& plan, std::size_t chain, SampleStore* store,
                      const TargetProblem& problem, const KernelConfig& config,
                      const std::atomic<bool>* cancel = nullptr,
                      std::optional<std::chrono::steady_clock::time_point> t0 = std::nullopt);

/// Runs plan.n_chains chains concurrently (one OpenMP thread each) against a
/// single shared store, which is seeded first in local-approximation mode.
RunResult run_parallel(const RunPlan& plan, const TargetProblem& problem,
                       const KernelConfig& config);

/// `t,theta_0..,accepted,n_refine,cum_model_evals`, 17 significant digits.
void write_trajectory_csv(std::ostream& os, const ChainOutput& chain);

}  // namespace lamcmc
