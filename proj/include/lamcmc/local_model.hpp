#pragma once

#include "lamcmc/sample_store.hpp"
#include "lamcmc/types.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace lamcmc {

struct LocalFitConfig {
  std::size_t dim = 0;
  std::size_t n_defining = 0;  // (d+1)(d+2)/2 coefficients of a quadratic in d variables
  std::size_t n_points = 0;    // neighbours used per fit
  double cond_threshold = 1e8;

  static std::size_t defining_points(std::size_t dim) { return (dim + 1) * (dim + 2) / 2; }

  /// N = ceil(sqrt(d) * N_def), raised to N_def + 1 when that would leave no
  /// spare point for leave-one-out fits (d = 1).
  static LocalFitConfig defaults(std::size_t dim);

  void validate() const;
};

/// Value, Jacobian and per-output Hessians of a model at one point.
struct LocalDerivatives {
  Matrix jacobian;               // m x d
  std::vector<Matrix> hessians;  // m entries, each d x d
};

/// Quadratic surrogate valid near `center`, one polynomial per output
/// component, stored in scaled coordinates u = (theta - center) / radius:
///
///   f_k(u) = constant[k] + linear.row(k) . u + 0.5 u' quadratic[k] u
class LocalQuadratic {
 public:
  Vector center;
  double radius = 1.0;
  Vector constant;                 // m
  Matrix linear;                   // m x d
  std::vector<Matrix> quadratic;   // m symmetric d x d blocks
  std::vector<std::size_t> used_ids;
  std::optional<std::size_t> excluded_id;
  /// Condition number of the design matrix. NaN for leave-one-out fits
  /// obtained by downdating, where it is not computed.
  double cond_number = 0.0;

  std::size_t dim_in() const { return static_cast<std::size_t>(center.size()); }
  std::size_t dim_out() const { return static_cast<std::size_t>(constant.size()); }

  Vector evaluate(const Vector& theta) const;
  LocalDerivatives grad_hess(const Vector& theta) const;
};

/// Least-squares quadratic through the `config.n_points` nearest stored
/// points, optionally leaving out the point with id `exclude` (which must be
/// among them). Rank-deficient designs give the minimum-norm solution;
/// check conditioning_ok() before trusting the result.
LocalQuadratic fit_local(const Vector& center, const SampleStore& store,
                         const LocalFitConfig& config,
                         std::optional<std::size_t> exclude = std::nullopt);

/// Same fit on an already gathered neighbourhood.
LocalQuadratic fit_neighborhood(const Neighborhood& nb,
                                std::optional<std::size_t> exclude = std::nullopt);

/// All leave-one-out variants of the fit on `nb`, in neighbourhood order.
/// Uses a rank-one downdate of the nominal solution where the left-out
/// point has leverage safely below one, and a direct refit otherwise.
std::vector<LocalQuadratic> leave_one_out_fits(const Neighborhood& nb);

struct FitWithLoo {
  LocalQuadratic fit;
  std::vector<LocalQuadratic> loo;
};

/// Nominal fit and its leave-one-out variants from a single decomposition.
FitWithLoo fit_with_leave_one_out(const Neighborhood& nb);

/// Reference: every leave-one-out variant refit from scratch.
std::vector<LocalQuadratic> leave_one_out_fits_direct(const Neighborhood& nb);

bool conditioning_ok(const LocalQuadratic& model, const LocalFitConfig& config);

/// Number of local fits performed by this process (instrumentation).
std::size_t local_fit_count();

}  // namespace lamcmc
