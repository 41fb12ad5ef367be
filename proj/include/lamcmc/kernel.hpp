#pragma once

#include "lamcmc/local_model.hpp"
#include "lamcmc/proposal.hpp"
#include "lamcmc/refinement.hpp"
#include "lamcmc/sample_store.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>

namespace lamcmc {

enum class Mode { exact, local_approx };

struct KernelConfig {
  Mode mode = Mode::local_approx;
  LocalFitConfig fit;
  ProposalSpec proposal;
  RefinementPolicy policy;

  void validate() const;
};

struct ChainStats {
  std::size_t steps = 0;
  std::size_t accepted = 0;
  std::size_t refinements = 0;  // all refinement model runs by this chain
  std::size_t random_refinements = 0;
  std::size_t cv_refinements = 0;
  std::size_t conditioning_refinements = 0;
  std::size_t dedup_rejections = 0;
  std::size_t model_evals = 0;     // true-model runs inside steps (not the start point)
  std::size_t gradient_evals = 0;  // analytic derivative calls (exact chains)
  std::size_t initial_evals = 0;   // start-point evaluation of exact chains
  std::size_t max_retries = 0;
};

/// Per-chain state, owned by exactly one worker.
struct ChainState {
  Vector theta;
  std::size_t t = 0;  // completed steps
  std::uint64_t seed = 0;
  std::uint64_t chain = 0;
  AmState am;
  ChainStats stats;
  std::optional<ModelResponse> current;  // exact chains cache the response at theta
  // Local-approximation chains cache the surrogate fit at theta together
  // with the store size it was computed from.
  std::shared_ptr<const SideFit> fit_cache;
  std::size_t fit_cache_store_size = 0;
};

ChainState make_chain_state(const Vector& theta0, std::uint64_t seed, std::uint64_t chain,
                            const TargetProblem& problem, const KernelConfig& config);

struct AcceptanceResult {
  double log_alpha = 0.0;
  double alpha = 0.0;
  double log_numerator = 0.0;    // log target(theta+) + log q(theta+, theta- | f+)
  double log_denominator = 0.0;  // log target(theta-) + log q(theta-, theta+ | f-)
  bool out_of_support = false;
  std::optional<SideFit> minus;
  std::optional<SideFit> plus;
};

/// alpha = min(1, numerator / denominator) with both sides fitted from the store.
AcceptanceResult acceptance_alpha(const Vector& theta_minus, const Vector& theta_plus,
                                  const SampleStore& store, const TargetProblem& problem,
                                  const ProposalSpec& proposal, const LocalFitConfig& config);

/// Details of one pass through the refine/retry loop, for instrumentation.
struct AttemptInfo {
  std::size_t retry = 0;
  Vector theta_plus;
  double log_alpha = 0.0;
  std::optional<CvIndicators> cv;
  RefineAction action = RefineAction::none;
};

struct StepHooks {
  std::function<void(const AttemptInfo&)> on_attempt;
  /// Returning a value replaces the decided action for this attempt.
  std::function<std::optional<RefineAction>(const AttemptInfo&)> override_action;
};

struct StepRecord {
  bool accepted = false;
  std::size_t refinements = 0;
  double log_alpha = 0.0;
  Vector proposed;
};

/// One transition of the chain. In local-approximation mode the proposal
/// noise z is drawn once; each refinement grows the store and the whole
/// proposal/acceptance computation is redone with the same z.
StepRecord transition_step(ChainState& state, SampleStore* store, const TargetProblem& problem,
                           const KernelConfig& config, const StepHooks* hooks = nullptr);

}  // namespace lamcmc
