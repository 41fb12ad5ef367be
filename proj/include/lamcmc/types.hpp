#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lamcmc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Raised when a caller violates a documented precondition (dimension
/// mismatch, non-finite input, empty collections, bad configuration).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when the true model returns a non-finite or wrongly sized output.
class ModelError : public std::runtime_error {
 public:
  ModelError(const std::string& what, Vector theta)
      : std::runtime_error(what), theta_(std::move(theta)) {}
  const Vector& theta() const { return theta_; }

 private:
  Vector theta_;
};

/// Raised when a transition exceeds its refinement retry cap.
class RetryCapExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace lamcmc
