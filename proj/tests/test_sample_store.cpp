#include "lamcmc/random.hpp"
#include "lamcmc/sample_store.hpp"

#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <sstream>
#include <thread>

using namespace lamcmc;

namespace {

Vector v1(double x) { return Vector::Constant(1, x); }
Vector v2(double x, double y) {
  Vector v(2);
  v << x, y;
  return v;
}

}  // namespace

TEST_CASE("insert assigns increasing ids and rejects duplicates") {
  SampleStore store(2, 1);
  auto r = store.insert(v2(0, 0), v1(1));
  CHECK(r.id == 0);
  CHECK(r.inserted);
  CHECK(store.size() == 1);

  r = store.insert(v2(0, 0), v1(2));
  CHECK(r.id == 0);
  CHECK_FALSE(r.inserted);
  CHECK(store.size() == 1);

  SampleStore six(2, 1);
  for (int i = 0; i < 6; ++i) CHECK(six.insert(v2(i, -i), v1(i)).id == static_cast<std::size_t>(i));
  CHECK(six.size() == 6);
}

TEST_CASE("dedup threshold is relative to the larger norm") {
  SampleStore store(1, 1);
  store.insert(v1(1e6), v1(0));
  CHECK_FALSE(store.insert(v1(1e6 + 1e-3), v1(0)).inserted);  // 1e-9 relative
  CHECK(store.insert(v1(1e6 + 1.0), v1(0)).inserted);         // 1e-6 relative
  store.insert(v1(0.0), v1(0));
  CHECK_FALSE(store.insert(v1(1e-13), v1(0)).inserted);  // absolute floor
  CHECK(store.insert(v1(1e-9), v1(0)).inserted);
}

TEST_CASE("insert validates dimensions and finiteness") {
  SampleStore store(2, 1);
  CHECK_THROWS_AS(store.insert(v1(0), v1(0)), InvalidArgument);
  CHECK_THROWS_AS(store.insert(v2(0, 0), v2(0, 0)), InvalidArgument);
  CHECK_THROWS_AS(store.insert(v2(0, std::nan("")), v1(0)), InvalidArgument);
}

TEST_CASE("nearest_k hand example and full store") {
  SampleStore store(1, 1);
  for (double x : {0.0, 1.0, 3.0}) store.insert(v1(x), v1(x));
  auto nb = store.nearest_k(v1(0.4), 2);
  REQUIRE(nb.size() == 2);
  CHECK(nb.ids[0] == 0);
  CHECK(nb.ids[1] == 1);
  CHECK(nb.radius == doctest::Approx(0.6).epsilon(1e-12));

  nb = store.nearest_k(v1(0.4), 3);
  CHECK(nb.size() == 3);
  CHECK(nb.radius == doctest::Approx(2.6).epsilon(1e-12));
  CHECK_THROWS_AS(store.nearest_k(v1(0.4), 4), InvalidArgument);
}

TEST_CASE("nearest_k breaks ties by id") {
  SampleStore store(1, 1);
  store.insert(v1(1.0), v1(0));
  store.insert(v1(-1.0), v1(0));
  auto nb = store.nearest_k(v1(0.0), 1);
  CHECK(nb.ids[0] == 0);
}

TEST_CASE("nearest_k matches an exhaustive sort") {
  Stream rng(42);
  SampleStore store(2, 1);
  std::vector<Vector> pts;
  for (int i = 0; i < 100; ++i) {
    pts.push_back(v2(rng.uniform(), rng.uniform()));
    store.insert(pts.back(), v1(i));
  }
  for (int q = 0; q < 20; ++q) {
    const Vector c = v2(rng.uniform(), rng.uniform());
    std::vector<std::size_t> order(pts.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const double da = (pts[a] - c).norm(), db = (pts[b] - c).norm();
      return da < db || (da == db && a < b);
    });
    const auto nb = store.nearest_k(c, 6);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(nb.ids[j] == order[j]);
      CHECK(nb.thetas.row(static_cast<Eigen::Index>(j)).transpose() == pts[order[j]]);
      CHECK(nb.outputs(static_cast<Eigen::Index>(j), 0) == static_cast<double>(order[j]));
    }
    CHECK(nb.radius == doctest::Approx((pts[order[5]] - c).norm()).epsilon(1e-12));

    // Prefix property.
    const auto nb7 = store.nearest_k(c, 7);
    for (std::size_t j = 0; j < 6; ++j) CHECK(nb7.ids[j] == nb.ids[j]);
  }
}

TEST_CASE("cover radius estimate") {
  SampleStore store(1, 1);
  store.insert(v1(0), v1(0));
  store.insert(v1(1), v1(0));
  CHECK(store.cover_radius_estimate({v1(0.5)}) == doctest::Approx(0.5));
  CHECK(store.cover_radius_estimate({v1(0), v1(1)}) == 0.0);
  CHECK_THROWS_AS(store.cover_radius_estimate({}), InvalidArgument);
  SampleStore empty(1, 1);
  CHECK_THROWS_AS(empty.cover_radius_estimate({v1(0)}), InvalidArgument);

  SampleStore grid(2, 1);
  for (int i = 0; i < 10; ++i)
    for (int j = 0; j < 10; ++j) grid.insert(v2(0.05 + 0.1 * i, 0.05 + 0.1 * j), v1(0));
  Stream rng(7);
  std::vector<Vector> probes;
  for (int k = 0; k < 1000; ++k) probes.push_back(v2(rng.uniform(), rng.uniform()));
  const double r = grid.cover_radius_estimate(probes);
  CHECK(r == doctest::Approx(0.0707).epsilon(0.15));

  // Inserting can only shrink the estimate.
  double prev = r;
  for (int k = 0; k < 50; ++k) {
    grid.insert(v2(rng.uniform(), rng.uniform()), v1(0));
    const double now = grid.cover_radius_estimate(probes);
    CHECK(now <= prev);
    prev = now;
  }
}

TEST_CASE("csv round trip preserves points exactly") {
  Stream rng(3);
  SampleStore store(3, 2);
  for (int i = 0; i < 20; ++i) {
    Vector t = rng.standard_normal(3) * 1e3;
    store.insert(t, rng.standard_normal(2));
  }
  std::stringstream ss;
  store.write_csv(ss);
  CHECK(ss.str().rfind("id,theta_0,theta_1,theta_2,out_0,out_1\n", 0) == 0);

  SampleStore copy(3, 2);
  copy.read_csv(ss);
  const auto a = store.snapshot(), b = copy.snapshot();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].theta == b[i].theta);
    CHECK(a[i].output == b[i].output);
  }

  std::stringstream bad("id,theta_0,out_0\n0,1,2\n");
  SampleStore wrong(3, 2);
  CHECK_THROWS(wrong.read_csv(bad));
}

TEST_CASE("concurrent inserts and queries see consistent prefixes") {
  SampleStore store(2, 1);
  for (int i = 0; i < 10; ++i) store.insert(v2(i, 0), v1(i));
  const int per_thread = 200;
  std::vector<std::thread> workers;
  for (int w = 0; w < 4; ++w) {
    workers.emplace_back([&, w] {
      Stream rng(100 + w);
      for (int i = 0; i < per_thread; ++i) {
        store.insert(v2(rng.uniform() * 10, rng.uniform() * 10), v1(w));
        const auto nb = store.nearest_k(v2(5, 5), 6);
        for (std::size_t j = 1; j < nb.size(); ++j) CHECK(nb.distances[j - 1] <= nb.distances[j]);
        for (std::size_t j = 0; j < nb.size(); ++j)
          CHECK((nb.thetas.row(static_cast<Eigen::Index>(j)).transpose() - v2(5, 5)).norm() ==
                doctest::Approx(nb.distances[j]));
      }
    });
  }
  for (auto& t : workers) t.join();
  CHECK(store.size() == 10 + 4 * per_thread);
  const auto snap = store.snapshot();
  for (std::size_t i = 1; i < snap.size(); ++i) CHECK(snap[i - 1].id < snap[i].id);
}
