#pragma once

#include "lamcmc/local_model.hpp"
#include "lamcmc/proposal.hpp"
#include "lamcmc/random.hpp"
#include "lamcmc/sample_store.hpp"

#include <limits>
#include <span>
#include <vector>

namespace lamcmc {

/// beta_t = beta_scale * t^-beta_exp (random refinement probability),
/// gamma_t = gamma_scale * t^-gamma_exp (cross-validation threshold).
struct RefinementPolicy {
  double beta_scale = 0.01;
  double beta_exp = 0.2;
  double gamma_scale = 0.1;
  double gamma_exp = 0.1;
  std::size_t max_refinements_per_step = 100;
  std::size_t candidate_count = 100;

  /// No random refinement and an unreachable CV threshold.
  static RefinementPolicy disabled();

  void validate() const;
};

struct Schedules {
  double beta = 0.0;
  double gamma = 0.0;
};

/// Schedules at step t >= 1; beta is clamped to [0, 1].
Schedules schedules(const RefinementPolicy& policy, std::size_t t);

struct CvIndicators {
  double log_zeta = 0.0;
  double eps_minus = 0.0;
  double eps_plus = 0.0;
};

/// max_j |min(1,z) - min(1,z_j)| + |min(1,1/z) - min(1,1/z_j)| evaluated in
/// log space; log values of -inf stand for a zero ratio.
double cv_error(double log_zeta, std::span<const double> loo_log_zetas);

/// Everything the indicators need about one side (theta- or theta+) of a
/// proposed move: the point, its neighbourhood and the nominal surrogate.
struct SideFit {
  Vector theta;
  Neighborhood neighborhood;
  LocalQuadratic surrogate;
  std::vector<LocalQuadratic> loo;  // leave-one-out variants; empty until needed
};

/// Cross-validation indicators for the move minus -> plus. Each
/// leave-one-out surrogate replaces the nominal one on its own side in both
/// the target and the proposal density; the proposed point stays fixed.
CvIndicators cv_indicators(const SideFit& minus, const SideFit& plus, const TargetProblem& problem,
                           const ProposalSpec& proposal);

/// Convenience overload that gathers neighbourhoods and fits itself.
CvIndicators cv_indicators(const Vector& theta_minus, const Vector& theta_plus,
                           const SampleStore& store, const TargetProblem& problem,
                           const ProposalSpec& proposal, const LocalFitConfig& config);

struct RefineResult {
  Vector theta;        // the point where the true model was run
  std::size_t id = 0;  // store id (of the existing point if deduplicated)
  bool inserted = false;
  double radius = 0.0;
};

/// Best-of-M candidates in the ball of radius R (the N-th neighbour
/// distance) around theta: theta itself plus M-1 uniform draws, clipped to
/// the support, maximising the distance to the nearest stored point.
Vector maximin_candidate(const Vector& theta, const SampleStore& store, std::size_t n_neighbors,
                         std::size_t candidate_count, const std::optional<Box>& support,
                         Stream& rng, double* radius_out = nullptr);

/// Picks a space-filling point near theta, runs the true model there and
/// inserts the result. Model failures surface as ModelError carrying the
/// offending point; nothing is inserted in that case.
RefineResult refine_near(const Vector& theta, SampleStore& store, const TargetProblem& problem,
                         const LocalFitConfig& config, const RefinementPolicy& policy, Stream& rng);

enum class RefineAction { none, near_minus, near_plus };

/// Random refinement when u < beta_t (location chosen by location_u < 0.5
/// -> minus), otherwise refine near the side with the larger indicator if it
/// reaches gamma_t.
RefineAction decide(const RefinementPolicy& policy, std::size_t t, double eps_minus,
                    double eps_plus, double u, double location_u);

}  // namespace lamcmc
