#include "lamcmc/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lamcmc {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// min(1, exp(log_ratio)) with exp(-inf) = 0.
double clamp_ratio(double log_ratio) { return std::exp(std::min(0.0, log_ratio)); }
// min(1, 1 / exp(log_ratio)); a zero ratio gives 1.
double clamp_inverse(double log_ratio) {
  return log_ratio == kNegInf ? 1.0 : std::exp(std::min(0.0, -log_ratio));
}

bool needs_derivs(const ProposalSpec& p) { return p.needs_derivatives(); }

}  // namespace

RefinementPolicy RefinementPolicy::disabled() {
  RefinementPolicy p;
  p.beta_scale = 0.0;
  p.gamma_scale = std::numeric_limits<double>::infinity();
  return p;
}

void RefinementPolicy::validate() const {
  if (!(beta_scale >= 0.0)) throw InvalidArgument("RefinementPolicy: beta_scale must be >= 0");
  if (!(beta_exp >= 0.0 && beta_exp < 1.0))
    throw InvalidArgument("RefinementPolicy: beta_exp must lie in [0, 1)");
  if (!(gamma_scale > 0.0)) throw InvalidArgument("RefinementPolicy: gamma_scale must be > 0");
  if (!(gamma_exp >= 0.0)) throw InvalidArgument("RefinementPolicy: gamma_exp must be >= 0");
  if (max_refinements_per_step < 1) throw InvalidArgument("RefinementPolicy: cap must be >= 1");
  if (candidate_count < 1) throw InvalidArgument("RefinementPolicy: candidate_count must be >= 1");
}

Schedules schedules(const RefinementPolicy& policy, std::size_t t) {
  if (t == 0) throw InvalidArgument("schedules: step index must be >= 1");
  const double tt = static_cast<double>(t);
  Schedules s;
  s.beta = std::clamp(policy.beta_scale * std::pow(tt, -policy.beta_exp), 0.0, 1.0);
  s.gamma = std::max(0.0, policy.gamma_scale * std::pow(tt, -policy.gamma_exp));
  return s;
}

double cv_error(double log_zeta, std::span<const double> loo_log_zetas) {
  const double a = clamp_ratio(log_zeta);
  const double b = clamp_inverse(log_zeta);
  double worst = 0.0;
  for (double lz : loo_log_zetas)
    worst = std::max(worst, std::abs(a - clamp_ratio(lz)) + std::abs(b - clamp_inverse(lz)));
  return worst;
}

CvIndicators cv_indicators(const SideFit& minus, const SideFit& plus, const TargetProblem& problem,
                           const ProposalSpec& proposal) {
  const bool derivs = needs_derivs(proposal);
  auto term = [&](const Vector& from, const Vector& to, const LocalQuadratic& q) {
    return log_transition_term(from, to, response_from_surrogate(q, from, derivs), problem,
                               proposal);
  };

  CvIndicators out;
  const double num = term(plus.theta, minus.theta, plus.surrogate);
  const double den = term(minus.theta, plus.theta, minus.surrogate);
  if (den == kNegInf) throw InvalidArgument("cv_indicators: current state has zero density");
  out.log_zeta = num - den;

  std::vector<double> loo;
  std::vector<LocalQuadratic> computed;
  auto loo_of = [&](const SideFit& side) -> const std::vector<LocalQuadratic>& {
    if (!side.loo.empty()) return side.loo;
    computed = leave_one_out_fits(side.neighborhood);
    return computed;
  };
  const auto& plus_loo = loo_of(plus);
  loo.reserve(plus_loo.size());
  for (const auto& q : plus_loo) loo.push_back(term(plus.theta, minus.theta, q) - den);
  out.eps_plus = cv_error(out.log_zeta, loo);

  loo.clear();
  const auto& minus_loo = loo_of(minus);
  for (const auto& q : minus_loo) {
    const double den_j = term(minus.theta, plus.theta, q);
    loo.push_back(den_j == kNegInf ? std::numeric_limits<double>::infinity() : num - den_j);
  }
  out.eps_minus = cv_error(out.log_zeta, loo);
  return out;
}

CvIndicators cv_indicators(const Vector& theta_minus, const Vector& theta_plus,
                           const SampleStore& store, const TargetProblem& problem,
                           const ProposalSpec& proposal, const LocalFitConfig& config) {
  auto side = [&](const Vector& theta) {
    SideFit s{theta, store.nearest_k(theta, config.n_points), {}, {}};
    s.surrogate = fit_neighborhood(s.neighborhood);
    return s;
  };
  return cv_indicators(side(theta_minus), side(theta_plus), problem, proposal);
}

Vector maximin_candidate(const Vector& theta, const SampleStore& store, std::size_t n_neighbors,
                         std::size_t candidate_count, const std::optional<Box>& support,
                         Stream& rng, double* radius_out) {
  const std::size_t n = store.size();
  if (n == 0) throw InvalidArgument("refine_near: store is empty");
  const std::size_t k = std::min(n_neighbors, n);
  const double radius = store.nearest_k(theta, k).radius;
  if (radius_out) *radius_out = radius;

  const auto d = static_cast<std::size_t>(theta.size());
  std::vector<Vector> candidates;
  candidates.reserve(std::max<std::size_t>(candidate_count, 1));
  candidates.push_back(support ? support->clip(theta) : theta);
  for (std::size_t c = 1; c < candidate_count; ++c) {
    Vector dir = rng.standard_normal(d);
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    const double r = radius * std::pow(rng.uniform(), 1.0 / static_cast<double>(d));
    Vector cand = theta + (r / norm) * dir;
    candidates.push_back(support ? support->clip(cand) : cand);
  }
  const auto dist = store.min_distances(candidates);
  const auto best = std::max_element(dist.begin(), dist.end()) - dist.begin();
  return candidates[static_cast<std::size_t>(best)];
}

RefineResult refine_near(const Vector& theta, SampleStore& store, const TargetProblem& problem,
                         const LocalFitConfig& config, const RefinementPolicy& policy, Stream& rng) {
  RefineResult res;
  res.theta = maximin_candidate(theta, store, config.n_points, policy.candidate_count,
                                problem.support(), rng, &res.radius);
  const Vector output = problem.evaluate(res.theta);
  const InsertResult ins = store.insert(res.theta, output);
  res.id = ins.id;
  res.inserted = ins.inserted;
  return res;
}

RefineAction decide(const RefinementPolicy& policy, std::size_t t, double eps_minus,
                    double eps_plus, double u, double location_u) {
  const Schedules s = schedules(policy, t);
  if (u < s.beta) return location_u < 0.5 ? RefineAction::near_minus : RefineAction::near_plus;
  if (eps_plus >= eps_minus && eps_plus >= s.gamma) return RefineAction::near_plus;
  if (eps_minus > eps_plus && eps_minus >= s.gamma) return RefineAction::near_minus;
  return RefineAction::none;
}

}  // namespace lamcmc
