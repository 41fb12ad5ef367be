#include "lamcmc/kernel.hpp"

#include <cmath>
#include <memory>
#include <limits>
#include <string>

namespace lamcmc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

SideFit fit_side(const Vector& theta, const SampleStore& store, const LocalFitConfig& config) {
  SideFit s{theta, store.nearest_k(theta, config.n_points), {}, {}};
  FitWithLoo f = fit_with_leave_one_out(s.neighborhood);
  s.surrogate = std::move(f.fit);
  s.loo = std::move(f.loo);
  return s;
}

// The store only grows, so an unchanged size means an unchanged store.
// The size is read before fitting so a concurrent insert can only
// invalidate the cache, never make a stale fit look current.
std::shared_ptr<const SideFit> cached_fit(std::shared_ptr<const SideFit>& cache,
                                          std::size_t& cache_size, const Vector& theta,
                                          const SampleStore& store, const LocalFitConfig& config) {
  const std::size_t n = store.size();
  if (cache && cache_size == n && cache->theta == theta) return cache;
  cache = std::make_shared<const SideFit>(fit_side(theta, store, config));
  cache_size = n;
  return cache;
}

bool accept_draw(const ChainState& s, double log_alpha) {
  Stream rng = substream(s.seed, s.chain, s.t, Slot::accept);
  const double u = rng.uniform();
  return log_alpha >= 0.0 || std::log(u) < log_alpha;
}

StepRecord exact_step(ChainState& s, const TargetProblem& problem, const KernelConfig& cfg,
                      const Vector& z, const StepHooks* hooks) {
  const bool derivs = cfg.proposal.needs_derivatives();
  StepRecord rec;
  rec.proposed = coupled_propose(s.theta, z, *s.current, problem, cfg.proposal, s.am);

  AttemptInfo info;
  info.theta_plus = rec.proposed;
  if (!problem.in_support(rec.proposed)) {
    rec.log_alpha = kNegInf;
    info.log_alpha = kNegInf;
    if (hooks && hooks->on_attempt) hooks->on_attempt(info);
    return rec;
  }

  ModelResponse plus = response_from_model(problem, rec.proposed, derivs);
  ++s.stats.model_evals;
  if (derivs) ++s.stats.gradient_evals;

  const double num = log_transition_term(rec.proposed, s.theta, plus, problem, cfg.proposal);
  const double den = log_transition_term(s.theta, rec.proposed, *s.current, problem, cfg.proposal);
  rec.log_alpha = std::min(0.0, num - den);
  info.log_alpha = rec.log_alpha;
  if (hooks && hooks->on_attempt) hooks->on_attempt(info);

  if (accept_draw(s, rec.log_alpha)) {
    s.theta = rec.proposed;
    s.current = std::move(plus);
    rec.accepted = true;
  }
  return rec;
}

}  // namespace

void KernelConfig::validate() const {
  fit.validate();
  proposal.validate();
  policy.validate();
}

ChainState make_chain_state(const Vector& theta0, std::uint64_t seed, std::uint64_t chain,
                            const TargetProblem& problem, const KernelConfig& config) {
  if (static_cast<std::size_t>(theta0.size()) != problem.dim())
    throw InvalidArgument("make_chain_state: start point dimension mismatch");
  if (!problem.in_support(theta0)) throw InvalidArgument("make_chain_state: start point off support");
  ChainState s;
  s.theta = theta0;
  s.seed = seed;
  s.chain = chain;
  s.am = AmState(problem.dim(), config.proposal);
  s.am.update(theta0);
  if (config.mode == Mode::exact) {
    const bool derivs = config.proposal.needs_derivatives();
    s.current = response_from_model(problem, theta0, derivs);
    ++s.stats.initial_evals;
    if (derivs) ++s.stats.gradient_evals;
  }
  return s;
}

AcceptanceResult acceptance_alpha(const Vector& theta_minus, const Vector& theta_plus,
                                  const SampleStore& store, const TargetProblem& problem,
                                  const ProposalSpec& proposal, const LocalFitConfig& config) {
  AcceptanceResult r;
  if (!problem.in_support(theta_plus)) {
    r.out_of_support = true;
    r.log_alpha = kNegInf;
    r.alpha = 0.0;
    r.log_numerator = kNegInf;
    return r;
  }
  const bool derivs = proposal.needs_derivatives();
  r.minus = fit_side(theta_minus, store, config);
  r.plus = fit_side(theta_plus, store, config);
  r.log_numerator =
      log_transition_term(theta_plus, theta_minus,
                          response_from_surrogate(r.plus->surrogate, theta_plus, derivs), problem,
                          proposal);
  r.log_denominator =
      log_transition_term(theta_minus, theta_plus,
                          response_from_surrogate(r.minus->surrogate, theta_minus, derivs),
                          problem, proposal);
  r.log_alpha = std::min(0.0, r.log_numerator - r.log_denominator);
  r.alpha = std::exp(r.log_alpha);
  return r;
}

StepRecord transition_step(ChainState& s, SampleStore* store, const TargetProblem& problem,
                           const KernelConfig& cfg, const StepHooks* hooks) {
  const std::size_t t = s.t + 1;
  const std::size_t d = problem.dim();
  Stream zrng = substream(s.seed, s.chain, t, Slot::proposal);
  const Vector z = zrng.standard_normal(d);

  StepRecord rec;
  if (cfg.mode == Mode::exact) {
    s.t = t;
    rec = exact_step(s, problem, cfg, z, hooks);
  } else {
    if (!store) throw InvalidArgument("transition_step: local approximation needs a store");
    const bool derivs = cfg.proposal.needs_derivatives();
    s.t = t;
    for (std::size_t retry = 0;; ++retry) {
      const auto minus_ptr = cached_fit(s.fit_cache, s.fit_cache_store_size, s.theta, *store, cfg.fit);
      const SideFit& minus = *minus_ptr;
      const ModelResponse resp_minus = response_from_surrogate(minus.surrogate, s.theta, derivs);
      rec.proposed = coupled_propose(s.theta, z, resp_minus, problem, cfg.proposal, s.am);

      AttemptInfo info;
      info.retry = retry;
      info.theta_plus = rec.proposed;

      if (!problem.in_support(rec.proposed)) {
        rec.log_alpha = kNegInf;
        info.log_alpha = kNegInf;
        if (hooks && hooks->on_attempt) hooks->on_attempt(info);
        break;
      }

      const std::size_t plus_store_size = store->size();
      auto plus_ptr = std::make_shared<const SideFit>(fit_side(rec.proposed, *store, cfg.fit));
      const SideFit& plus = *plus_ptr;
      const double num = log_transition_term(
          rec.proposed, s.theta, response_from_surrogate(plus.surrogate, rec.proposed, derivs),
          problem, cfg.proposal);
      const double den =
          log_transition_term(s.theta, rec.proposed, resp_minus, problem, cfg.proposal);
      rec.log_alpha = std::min(0.0, num - den);
      info.log_alpha = rec.log_alpha;

      RefineAction action = RefineAction::none;
      bool conditioning = false;
      if (!conditioning_ok(plus.surrogate, cfg.fit)) {
        action = RefineAction::near_plus;
        conditioning = true;
      } else if (!conditioning_ok(minus.surrogate, cfg.fit)) {
        action = RefineAction::near_minus;
        conditioning = true;
      } else {
        info.cv = cv_indicators(minus, plus, problem, cfg.proposal);
        const double u = substream(s.seed, s.chain, t, Slot::refine_coin, retry).uniform();
        const double loc = substream(s.seed, s.chain, t, Slot::location_coin, retry).uniform();
        const Schedules sched = schedules(cfg.policy, t);
        action = decide(cfg.policy, t, info.cv->eps_minus, info.cv->eps_plus, u, loc);
        if (action != RefineAction::none) {
          if (u < sched.beta)
            ++s.stats.random_refinements;
          else
            ++s.stats.cv_refinements;
        }
      }
      if (conditioning) ++s.stats.conditioning_refinements;
      info.action = action;
      if (hooks && hooks->override_action)
        if (auto forced = hooks->override_action(info)) info.action = action = *forced;
      if (hooks && hooks->on_attempt) hooks->on_attempt(info);

      if (action == RefineAction::none) {
        if (accept_draw(s, rec.log_alpha)) {
          s.theta = rec.proposed;
          s.fit_cache = std::move(plus_ptr);
          s.fit_cache_store_size = plus_store_size;
          rec.accepted = true;
        }
        break;
      }
      if (retry >= cfg.policy.max_refinements_per_step)
        throw RetryCapExceeded("chain " + std::to_string(s.chain) + " step " + std::to_string(t) +
                               ": more than " + std::to_string(cfg.policy.max_refinements_per_step) +
                               " refinements");

      const Vector& where = action == RefineAction::near_plus ? rec.proposed : s.theta;
      Stream mrng = substream(s.seed, s.chain, t, Slot::maximin, retry);
      const RefineResult rr = refine_near(where, *store, problem, cfg.fit, cfg.policy, mrng);
      ++rec.refinements;
      ++s.stats.refinements;
      ++s.stats.model_evals;
      if (!rr.inserted) ++s.stats.dedup_rejections;
      s.stats.max_retries = std::max(s.stats.max_retries, retry + 1);
    }
  }

  ++s.stats.steps;
  if (rec.accepted) ++s.stats.accepted;
  s.am.update(s.theta);
  return rec;
}

}  // namespace lamcmc
