#pragma once

#include "lamcmc/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace lamcmc {

/// Black-box model: parameters in R^d to outputs in R^m.
using ModelFn = std::function<Vector(const Vector&)>;

/// Optional analytic derivatives of the model, used only by exact chains
/// whose proposal needs gradients.
struct ModelDerivativesAt {
  Matrix jacobian;               // m x d
  std::vector<Matrix> hessians;  // m entries d x d (may be empty for forward models)
};
using DerivativeFn = std::function<ModelDerivativesAt(const Vector&)>;

struct Box {
  Vector lower;
  Vector upper;

  bool contains(const Vector& theta) const;
  Vector clip(const Vector& theta) const;
};

struct GaussianPrior {
  Vector mean;
  Matrix cov;
};

using Prior = std::variant<GaussianPrior, Box>;

enum class Flavor {
  forward_model,  // Gaussian likelihood N(data; f(theta), noise_cov) times prior
  log_density,    // f(theta) is log(likelihood * prior) up to a constant; m = 1
};

/// The inference problem: model, data, likelihood and prior.
///
/// For the log-density flavour the prior is already folded into the model
/// output; the prior given here only drives starting points and the
/// initial design (and its box, if any, still restricts the support).
class TargetProblem {
 public:
  static TargetProblem forward(std::size_t dim, ModelFn model, Vector data, Matrix noise_cov,
                               Prior prior, std::optional<Box> support = std::nullopt);
  static TargetProblem log_density(std::size_t dim, ModelFn model, Prior seed_prior,
                                   std::optional<Box> support = std::nullopt);

  Flavor flavor() const { return flavor_; }
  std::size_t dim() const { return dim_; }
  std::size_t output_dim() const { return output_dim_; }
  const Prior& prior() const { return prior_; }
  const Vector& data() const { return data_; }
  const Matrix& noise_precision() const { return noise_precision_; }

  /// Calls the true model; throws ModelError on non-finite or mis-sized output.
  Vector evaluate(const Vector& theta) const;

  bool has_derivatives() const { return static_cast<bool>(derivatives_); }
  ModelDerivativesAt derivatives(const Vector& theta) const;
  void set_derivatives(DerivativeFn fn) { derivatives_ = std::move(fn); }

  bool in_support(const Vector& theta) const;
  /// Effective support box (explicit support intersected with a box prior).
  const std::optional<Box>& support() const { return support_; }

  double log_prior(const Vector& theta) const;
  Vector grad_log_prior(const Vector& theta) const;
  /// -Hessian of log prior (the prior precision, or zero for a box).
  Matrix prior_precision() const;

  /// Gaussian log-likelihood of the data given model output.
  double log_likelihood(const Vector& output) const;

  /// Unnormalised log posterior given a model output at theta.
  double log_target(const Vector& theta, const Vector& output) const;

  /// Draw from the prior (Gaussian or uniform over the box).
  template <class Rng>
  Vector sample_prior(Rng& rng) const;

 private:
  Flavor flavor_ = Flavor::log_density;
  std::size_t dim_ = 0;
  std::size_t output_dim_ = 1;
  ModelFn model_;
  DerivativeFn derivatives_;
  Vector data_;
  Matrix noise_precision_;
  double noise_log_norm_ = 0.0;
  Prior prior_;
  Matrix prior_precision_;
  Matrix prior_chol_;
  double prior_log_norm_ = 0.0;
  std::optional<Box> support_;
};

template <class Rng>
Vector TargetProblem::sample_prior(Rng& rng) const {
  if (const auto* g = std::get_if<GaussianPrior>(&prior_))
    return g->mean + prior_chol_ * rng.standard_normal(dim_);
  const auto& box = std::get<Box>(prior_);
  Vector out(dim_);
  for (std::size_t i = 0; i < dim_; ++i)
    out(i) = box.lower(i) + (box.upper(i) - box.lower(i)) * rng.uniform();
  return out;
}

}  // namespace lamcmc
