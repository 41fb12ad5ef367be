#include "lamcmc/local_model.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <string>

namespace lamcmc {
namespace {

std::atomic<std::size_t> g_fit_count{0};

// Leverage above this makes the downdate numerically unreliable.
constexpr double kMaxLeverage = 1.0 - 1e-8;
// Singular values below this fraction of the largest are treated as zero.
constexpr double kRankTolerance = 1e-13;

std::size_t n_coefficients(std::size_t d) { return LocalFitConfig::defining_points(d); }

void fill_basis_row(const double* u, std::size_t d, double* row) {
  std::size_t col = 0;
  row[col++] = 1.0;
  for (std::size_t i = 0; i < d; ++i) row[col++] = u[i];
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i; j < d; ++j) row[col++] = u[i] * u[j];
}

struct Design {
  Matrix x;  // rows x p, scaled coordinates
  Matrix y;  // rows x m
  std::vector<std::size_t> ids;
};

Design build_design(const Neighborhood& nb, std::optional<std::size_t> skip_row) {
  const std::size_t d = static_cast<std::size_t>(nb.thetas.cols());
  const std::size_t p = n_coefficients(d);
  const std::size_t rows = nb.size() - (skip_row ? 1 : 0);
  Design des;
  des.x.resize(rows, p);
  des.y.resize(rows, nb.outputs.cols());
  des.ids.reserve(rows);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> xr(rows, p);
  Vector u(d);
  std::size_t r = 0;
  for (std::size_t i = 0; i < nb.size(); ++i) {
    if (skip_row && *skip_row == i) continue;
    u = (nb.thetas.row(i).transpose() - nb.center) / nb.radius;
    fill_basis_row(u.data(), d, xr.row(r).data());
    des.y.row(r) = nb.outputs.row(i);
    des.ids.push_back(nb.ids[i]);
    ++r;
  }
  des.x = xr;
  return des;
}

LocalQuadratic from_coefficients(const Neighborhood& nb, const Matrix& beta) {
  const std::size_t d = static_cast<std::size_t>(nb.center.size());
  const std::size_t m = static_cast<std::size_t>(beta.cols());
  LocalQuadratic q;
  q.center = nb.center;
  q.radius = nb.radius;
  q.constant = beta.row(0).transpose();
  q.linear = beta.middleRows(1, d).transpose();
  q.quadratic.assign(m, Matrix::Zero(d, d));
  for (std::size_t k = 0; k < m; ++k) {
    std::size_t col = 1 + d;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = i; j < d; ++j, ++col) {
        if (i == j)
          q.quadratic[k](i, i) = 2.0 * beta(col, k);
        else
          q.quadratic[k](i, j) = q.quadratic[k](j, i) = beta(col, k);
      }
  }
  return q;
}

struct Solve {
  Matrix beta;
  double cond = 0.0;
  bool full_rank = false;
  Eigen::JacobiSVD<Matrix> svd;
};

Solve solve_min_norm(const Design& des) {
  Solve s;
  s.svd.compute(des.x, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& sv = s.svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
  const std::size_t p = static_cast<std::size_t>(des.x.cols());
  s.full_rank = static_cast<std::size_t>(sv.size()) == p && smin > kRankTolerance * smax;
  s.cond = (static_cast<std::size_t>(sv.size()) < p || smin <= 0.0)
               ? std::numeric_limits<double>::infinity()
               : smax / smin;
  Vector inv = Vector::Zero(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > kRankTolerance * smax) inv(i) = 1.0 / sv(i);
  s.beta = s.svd.matrixV() * (inv.asDiagonal() * (s.svd.matrixU().transpose() * des.y));
  return s;
}

void check_neighborhood(const Neighborhood& nb) {
  if (nb.size() == 0) throw InvalidArgument("local fit: empty neighbourhood");
  if (!(nb.radius > 0.0) || !std::isfinite(nb.radius))
    throw InvalidArgument("local fit: neighbourhood radius must be positive");
}

std::optional<std::size_t> row_of(const Neighborhood& nb, std::size_t id) {
  for (std::size_t i = 0; i < nb.size(); ++i)
    if (nb.ids[i] == id) return i;
  return std::nullopt;
}

}  // namespace

LocalFitConfig LocalFitConfig::defaults(std::size_t dim) {
  LocalFitConfig c;
  c.dim = dim;
  c.n_defining = defining_points(dim);
  const auto oversampled =
      static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(dim)) * c.n_defining - 1e-9));
  c.n_points = std::max(oversampled, c.n_defining + 1);
  return c;
}

void LocalFitConfig::validate() const {
  if (dim == 0) throw InvalidArgument("LocalFitConfig: dim must be positive");
  if (n_defining != defining_points(dim))
    throw InvalidArgument("LocalFitConfig: n_defining must equal (d+1)(d+2)/2");
  if (n_points < n_defining) throw InvalidArgument("LocalFitConfig: n_points < n_defining");
  if (!(cond_threshold > 1.0)) throw InvalidArgument("LocalFitConfig: cond_threshold must exceed 1");
}

Vector LocalQuadratic::evaluate(const Vector& theta) const {
  if (theta.size() != center.size()) throw InvalidArgument("LocalQuadratic::evaluate: dimension");
  if (!theta.allFinite()) throw InvalidArgument("LocalQuadratic::evaluate: non-finite theta");
  const Vector u = (theta - center) / radius;
  Vector out = constant + linear * u;
  for (std::size_t k = 0; k < quadratic.size(); ++k) out(k) += 0.5 * u.dot(quadratic[k] * u);
  return out;
}

LocalDerivatives LocalQuadratic::grad_hess(const Vector& theta) const {
  if (theta.size() != center.size()) throw InvalidArgument("LocalQuadratic::grad_hess: dimension");
  const Vector u = (theta - center) / radius;
  LocalDerivatives out;
  out.jacobian.resize(dim_out(), dim_in());
  out.hessians.reserve(quadratic.size());
  for (std::size_t k = 0; k < quadratic.size(); ++k) {
    out.jacobian.row(k) = (linear.row(k).transpose() + quadratic[k] * u).transpose() / radius;
    out.hessians.push_back(quadratic[k] / (radius * radius));
  }
  return out;
}

LocalQuadratic fit_neighborhood(const Neighborhood& nb, std::optional<std::size_t> exclude) {
  check_neighborhood(nb);
  std::optional<std::size_t> skip;
  if (exclude) {
    skip = row_of(nb, *exclude);
    if (!skip)
      throw InvalidArgument("fit_local: excluded id " + std::to_string(*exclude) +
                            " is not among the nearest points");
  }
  const Design des = build_design(nb, skip);
  const Solve s = solve_min_norm(des);
  LocalQuadratic q = from_coefficients(nb, s.beta);
  q.used_ids = des.ids;
  q.excluded_id = exclude;
  q.cond_number = s.cond;
  g_fit_count.fetch_add(1, std::memory_order_relaxed);
  return q;
}

LocalQuadratic fit_local(const Vector& center, const SampleStore& store,
                         const LocalFitConfig& config, std::optional<std::size_t> exclude) {
  if (static_cast<std::size_t>(center.size()) != config.dim)
    throw InvalidArgument("fit_local: center dimension does not match config");
  if (!center.allFinite()) throw InvalidArgument("fit_local: non-finite center");
  if (store.size() < config.n_points)
    throw InvalidArgument("fit_local: store has " + std::to_string(store.size()) +
                          " points, need " + std::to_string(config.n_points));
  return fit_neighborhood(store.nearest_k(center, config.n_points), exclude);
}

FitWithLoo fit_with_leave_one_out(const Neighborhood& nb) {
  check_neighborhood(nb);
  const Design des = build_design(nb, std::nullopt);
  const Solve s = solve_min_norm(des);
  g_fit_count.fetch_add(2, std::memory_order_relaxed);

  FitWithLoo res;
  res.fit = from_coefficients(nb, s.beta);
  res.fit.used_ids = des.ids;
  res.fit.cond_number = s.cond;

  const Matrix& u = s.svd.matrixU();
  const Matrix& v = s.svd.matrixV();
  const Vector& sv = s.svd.singularValues();
  const Matrix residuals = des.y - des.x * s.beta;

  res.loo.reserve(nb.size());
  Matrix beta(s.beta.rows(), s.beta.cols());
  Vector w(v.rows());
  for (std::size_t j = 0; j < nb.size(); ++j) {
    const double leverage = u.row(j).squaredNorm();
    if (!s.full_rank || leverage > kMaxLeverage) {
      res.loo.push_back(fit_neighborhood(nb, nb.ids[j]));
      continue;
    }
    // (X'X)^{-1} x_j = V S^{-1} U_j'
    w.noalias() = v * u.row(j).transpose().cwiseQuotient(sv);
    beta = s.beta;
    beta.noalias() -= w * (residuals.row(j) / (1.0 - leverage));
    LocalQuadratic q = from_coefficients(nb, beta);
    q.used_ids.reserve(nb.size() - 1);
    for (std::size_t i = 0; i < nb.size(); ++i)
      if (i != j) q.used_ids.push_back(nb.ids[i]);
    q.excluded_id = nb.ids[j];
    q.cond_number = std::numeric_limits<double>::quiet_NaN();
    res.loo.push_back(std::move(q));
  }
  return res;
}

std::vector<LocalQuadratic> leave_one_out_fits(const Neighborhood& nb) {
  return fit_with_leave_one_out(nb).loo;
}

std::vector<LocalQuadratic> leave_one_out_fits_direct(const Neighborhood& nb) {
  std::vector<LocalQuadratic> out;
  out.reserve(nb.size());
  for (std::size_t j = 0; j < nb.size(); ++j) out.push_back(fit_neighborhood(nb, nb.ids[j]));
  return out;
}

bool conditioning_ok(const LocalQuadratic& model, const LocalFitConfig& config) {
  return model.cond_number <= config.cond_threshold;
}

std::size_t local_fit_count() { return g_fit_count.load(std::memory_order_relaxed); }

}  // namespace lamcmc
