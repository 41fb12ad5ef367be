#include "lamcmc/sample_store.hpp"

#include "lamcmc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace lamcmc {

SampleStore::SampleStore(std::size_t dim_in, std::size_t dim_out, double relative_separation,
                         double absolute_floor)
    : dim_in_(dim_in),
      dim_out_(dim_out),
      relative_separation_(relative_separation),
      absolute_floor_(absolute_floor) {
  if (dim_in == 0 || dim_out == 0) throw InvalidArgument("SampleStore: dimensions must be positive");
  if (!(relative_separation >= 0.0) || !(absolute_floor >= 0.0))
    throw InvalidArgument("SampleStore: separation thresholds must be non-negative");
}

std::size_t SampleStore::size() const {
  std::shared_lock lock(mutex_);
  return ids_.size();
}

bool SampleStore::coincides(const double* a, const double* b) const {
  double dist2 = 0.0, na2 = 0.0, nb2 = 0.0;
  for (std::size_t k = 0; k < dim_in_; ++k) {
    dist2 += (a[k] - b[k]) * (a[k] - b[k]);
    na2 += a[k] * a[k];
    nb2 += b[k] * b[k];
  }
  const double tol =
      std::max(relative_separation_ * std::sqrt(std::max(na2, nb2)), absolute_floor_);
  return std::sqrt(dist2) <= tol;
}

InsertResult SampleStore::insert(const Vector& theta, const Vector& output) {
  if (static_cast<std::size_t>(theta.size()) != dim_in_ ||
      static_cast<std::size_t>(output.size()) != dim_out_)
    throw InvalidArgument("SampleStore::insert: dimension mismatch");
  if (!theta.allFinite()) throw InvalidArgument("SampleStore::insert: non-finite theta");
  if (!output.allFinite()) throw InvalidArgument("SampleStore::insert: non-finite output");

  std::unique_lock lock(mutex_);
  for (std::size_t i = 0; i < ids_.size(); ++i)
    if (coincides(thetas_.data() + i * dim_in_, theta.data())) return {ids_[i], false};

  thetas_.insert(thetas_.end(), theta.data(), theta.data() + dim_in_);
  outputs_.insert(outputs_.end(), output.data(), output.data() + dim_out_);
  ids_.push_back(next_id_);
  return {next_id_++, true};
}

Neighborhood SampleStore::nearest_k(const Vector& center, std::size_t k) const {
  if (static_cast<std::size_t>(center.size()) != dim_in_)
    throw InvalidArgument("SampleStore::nearest_k: dimension mismatch");

  std::shared_lock lock(mutex_);
  const std::size_t n = ids_.size();
  if (k == 0 || k > n)
    throw InvalidArgument("SampleStore::nearest_k: k=" + std::to_string(k) +
                          " exceeds store size " + std::to_string(n));

  std::vector<double> d2(n);
  kernels::squared_distances(thetas_, dim_in_, {center.data(), dim_in_}, d2);

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto closer = [&](std::size_t a, std::size_t b) {
    return d2[a] < d2[b] || (d2[a] == d2[b] && ids_[a] < ids_[b]);
  };
  if (k < n) std::nth_element(order.begin(), order.begin() + k - 1, order.end(), closer);
  std::sort(order.begin(), order.begin() + k, closer);

  Neighborhood nb;
  nb.center = center;
  nb.ids.resize(k);
  nb.distances.resize(k);
  nb.thetas.resize(k, dim_in_);
  nb.outputs.resize(k, dim_out_);
  for (std::size_t r = 0; r < k; ++r) {
    const std::size_t i = order[r];
    nb.ids[r] = ids_[i];
    nb.distances[r] = std::sqrt(d2[i]);
    for (std::size_t c = 0; c < dim_in_; ++c) nb.thetas(r, c) = thetas_[i * dim_in_ + c];
    for (std::size_t c = 0; c < dim_out_; ++c) nb.outputs(r, c) = outputs_[i * dim_out_ + c];
  }
  nb.radius = nb.distances.back();
  return nb;
}

std::vector<double> SampleStore::min_distances(const std::vector<Vector>& candidates) const {
  std::vector<double> flat;
  flat.reserve(candidates.size() * dim_in_);
  for (const auto& c : candidates) {
    if (static_cast<std::size_t>(c.size()) != dim_in_)
      throw InvalidArgument("SampleStore::min_distances: dimension mismatch");
    flat.insert(flat.end(), c.data(), c.data() + dim_in_);
  }
  std::vector<double> out(candidates.size());
  {
    std::shared_lock lock(mutex_);
    if (ids_.empty()) throw InvalidArgument("SampleStore::min_distances: empty store");
    kernels::min_squared_distances(flat, thetas_, dim_in_, out);
  }
  for (auto& v : out) v = std::sqrt(v);
  return out;
}

double SampleStore::cover_radius_estimate(const std::vector<Vector>& probes) const {
  if (probes.empty()) throw InvalidArgument("cover_radius_estimate: empty probe set");
  const auto d = min_distances(probes);
  return *std::max_element(d.begin(), d.end());
}

std::vector<SamplePoint> SampleStore::snapshot() const {
  std::shared_lock lock(mutex_);
  std::vector<SamplePoint> pts(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    pts[i].id = ids_[i];
    pts[i].theta = Eigen::Map<const Vector>(thetas_.data() + i * dim_in_, dim_in_);
    pts[i].output = Eigen::Map<const Vector>(outputs_.data() + i * dim_out_, dim_out_);
  }
  return pts;
}

void SampleStore::write_csv(std::ostream& os) const {
  const auto pts = snapshot();
  os << "id";
  for (std::size_t c = 0; c < dim_in_; ++c) os << ",theta_" << c;
  for (std::size_t c = 0; c < dim_out_; ++c) os << ",out_" << c;
  os << '\n' << std::setprecision(17);
  for (const auto& p : pts) {
    os << p.id;
    for (std::size_t c = 0; c < dim_in_; ++c) os << ',' << p.theta[c];
    for (std::size_t c = 0; c < dim_out_; ++c) os << ',' << p.output[c];
    os << '\n';
  }
}

void SampleStore::read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw InvalidArgument("store CSV: missing header");
  std::ostringstream expected;
  expected << "id";
  for (std::size_t c = 0; c < dim_in_; ++c) expected << ",theta_" << c;
  for (std::size_t c = 0; c < dim_out_; ++c) expected << ",out_" << c;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != expected.str()) throw InvalidArgument("store CSV: header mismatch: " + line);

  std::unique_lock lock(mutex_);
  if (!ids_.empty()) throw InvalidArgument("store CSV: target store is not empty");
  std::size_t row = 1;
  while (std::getline(is, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> values;
    std::size_t id = 0;
    bool first = true;
    while (std::getline(ss, cell, ',')) {
      try {
        if (first)
          id = std::stoull(cell);
        else
          values.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidArgument("store CSV: bad value on row " + std::to_string(row));
      }
      first = false;
    }
    if (values.size() != dim_in_ + dim_out_)
      throw InvalidArgument("store CSV: wrong column count on row " + std::to_string(row));
    if (!ids_.empty() && id <= ids_.back())
      throw InvalidArgument("store CSV: ids must be strictly increasing");
    thetas_.insert(thetas_.end(), values.begin(), values.begin() + dim_in_);
    outputs_.insert(outputs_.end(), values.begin() + dim_in_, values.end());
    ids_.push_back(id);
    next_id_ = id + 1;
  }
}

}  // namespace lamcmc
