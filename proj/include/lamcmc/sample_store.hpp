#pragma once

#include "lamcmc/types.hpp"

#include <cstddef>
#include <iosfwd>
#include <shared_mutex>
#include <vector>

namespace lamcmc {

struct SamplePoint {
  Vector theta;
  Vector output;
  std::size_t id = 0;
};

struct InsertResult {
  std::size_t id = 0;
  bool inserted = false;  // false: a coincident point already existed and `id` is its id
};

/// The k nearest stored points to a query, sorted by (distance, id).
struct Neighborhood {
  Vector center;
  std::vector<std::size_t> ids;
  std::vector<double> distances;
  Matrix thetas;   // k x d
  Matrix outputs;  // k x m
  double radius = 0.0;  // distance of the k-th point

  std::size_t size() const { return ids.size(); }
};

/// Append-only store of true-model evaluations shared between chains.
///
/// Inserts take an exclusive lock and queries a shared lock, so every query
/// observes a prefix of the insertion sequence and never a partial point.
/// Nearest-neighbour queries are exact linear scans.
class SampleStore {
 public:
  /// `relative_separation` is the dedup threshold: an insert within
  /// max(relative_separation * max(|a|, |b|), absolute_floor) of an existing
  /// point is rejected.
  SampleStore(std::size_t dim_in, std::size_t dim_out, double relative_separation = 1e-8,
              double absolute_floor = 1e-12);

  SampleStore(const SampleStore&) = delete;
  SampleStore& operator=(const SampleStore&) = delete;

  std::size_t dim_in() const { return dim_in_; }
  std::size_t dim_out() const { return dim_out_; }
  std::size_t size() const;

  InsertResult insert(const Vector& theta, const Vector& output);

  Neighborhood nearest_k(const Vector& center, std::size_t k) const;

  /// max over probes of the distance to the nearest stored point.
  double cover_radius_estimate(const std::vector<Vector>& probes) const;

  /// Minimum distance from each candidate to the store (same snapshot for all).
  std::vector<double> min_distances(const std::vector<Vector>& candidates) const;

  std::vector<SamplePoint> snapshot() const;

  /// CSV with header `id,theta_0..,out_0..`, 17 significant digits.
  void write_csv(std::ostream& os) const;
  /// Reads a CSV written by write_csv into an empty store.
  void read_csv(std::istream& is);

 private:
  bool coincides(const double* a, const double* b) const;

  std::size_t dim_in_;
  std::size_t dim_out_;
  double relative_separation_;
  double absolute_floor_;

  mutable std::shared_mutex mutex_;
  std::vector<double> thetas_;   // row-major n x dim_in
  std::vector<double> outputs_;  // row-major n x dim_out
  std::vector<std::size_t> ids_;
  std::size_t next_id_ = 0;
};

}  // namespace lamcmc
