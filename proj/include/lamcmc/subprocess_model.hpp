#pragma once

#include "lamcmc/problem.hpp"

#include <memory>
#include <string>
#include <vector>

namespace lamcmc {

/// Adapter for a black-box model living in another process.
///
/// Protocol: for each evaluation the engine writes theta as one line of
/// whitespace-separated numbers to the child's stdin and reads one line of
/// `output_dim` whitespace-separated numbers from its stdout. Children are
/// spawned lazily, one per concurrently evaluating thread, and kept alive
/// for the adapter's lifetime.
class SubprocessModel {
 public:
  SubprocessModel(std::vector<std::string> argv, std::size_t output_dim);
  ~SubprocessModel();

  SubprocessModel(const SubprocessModel&) = delete;
  SubprocessModel& operator=(const SubprocessModel&) = delete;

  Vector operator()(const Vector& theta);

  /// A copyable callback sharing this adapter's process pool.
  static ModelFn make(std::vector<std::string> argv, std::size_t output_dim);

 private:
  struct Child;
  struct Pool;
  std::unique_ptr<Pool> pool_;
};

}  // namespace lamcmc
