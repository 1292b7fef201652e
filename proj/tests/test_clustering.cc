#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "avcurate/clustering.h"
#include "doctest.h"
#include "oracles.h"

using namespace avcurate;

namespace {

std::vector<std::vector<double>> gaussian_blob(std::mt19937_64& rng, std::size_t n, std::vector<double> centre,
                                               double sd) {
  std::normal_distribution<double> g(0.0, sd);
  std::vector<std::vector<double>> pts;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = centre;
    for (auto& v : p) v += g(rng);
    pts.push_back(p);
  }
  return pts;
}

std::vector<double> oracle_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g;
  std::vector<double> v(dim);
  double n = 0;
  for (auto& x : v) {
    x = g(rng);
    n += x * x;
  }
  for (auto& x : v) x /= std::sqrt(n);
  return v;
}

Embedding face(const std::string& id, std::vector<double> v) {
  Embedding e{id, {}};
  for (double x : v) e.values.push_back(static_cast<float>(x));
  return e;
}

// Canonical labels are only defined up to the DBSCAN result; compare
// partitions as sets of member lists.
std::vector<std::vector<std::size_t>> partition(const std::vector<int>& labels) {
  const int k = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(std::max(k, 0)));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] >= 0) out[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_SUITE("clustering") {
  TEST_CASE("distance matrix validation") {
    CHECK_THROWS(DistanceMatrix::from_dense(2, {0, 1, 2, 0}));
    CHECK_THROWS(DistanceMatrix::from_dense(2, {1, 1, 1, 0}));
    CHECK_THROWS(DistanceMatrix::from_dense(2, {0, -1, -1, 0}));
    CHECK_THROWS(DistanceMatrix::from_dense(2, {0, NAN, NAN, 0}));
    CHECK_THROWS(DistanceMatrix::from_dense(2, {0, 1, 1}));
    const auto d = DistanceMatrix::from_dense(2, {0, 3, 3, 0});
    CHECK(d.max_value() == 3.0);
    const std::vector<std::vector<double>> pts{{0, 0}, {3, 4}};
    CHECK(DistanceMatrix::euclidean(pts)(0, 1) == doctest::Approx(5.0));
  }

  TEST_CASE("single point is core at min_pts 1 and noise above") {
    const DistanceMatrix d(1);
    auto a = dbscan(d, 0.5, 1);
    CHECK(a.num_clusters == 1);
    CHECK(a.labels[0] == 0);
    a = dbscan(d, 0.5, 2);
    CHECK(a.num_clusters == 0);
    CHECK(a.labels[0] == ClusterAssignment::kNoise);
    CHECK_FALSE(largest_cluster(a).has_value());
  }

  TEST_CASE("empty input") {
    const auto a = dbscan(DistanceMatrix(0), 1.0, 2);
    CHECK(a.num_clusters == 0);
    CHECK(a.labels.empty());
  }

  TEST_CASE("two tight groups far apart give two clusters") {
    std::mt19937_64 rng(4);
    auto pts = gaussian_blob(rng, 10, {0, 0}, 0.05);
    const auto far = gaussian_blob(rng, 10, {100, 0}, 0.05);
    pts.insert(pts.end(), far.begin(), far.end());
    const auto a = dbscan(DistanceMatrix::euclidean(pts), 1.0, 3);
    CHECK(a.num_clusters == 2);
    for (std::size_t i = 0; i < 10; ++i) CHECK(a.labels[i] == 0);
    for (std::size_t i = 10; i < 20; ++i) CHECK(a.labels[i] == 1);
  }

  TEST_CASE("sparse points are all noise") {
    std::vector<std::vector<double>> pts;
    for (int i = 0; i < 8; ++i) pts.push_back({10.0 * i, 0});
    const auto a = dbscan(DistanceMatrix::euclidean(pts), 1.0, 2);
    CHECK(a.num_clusters == 0);
    CHECK(std::all_of(a.labels.begin(), a.labels.end(), [](int l) { return l == ClusterAssignment::kNoise; }));
  }

  TEST_CASE("identical points form one cluster") {
    std::vector<std::vector<double>> pts(20, std::vector<double>{1.5, -2.0});
    const auto a = dbscan(DistanceMatrix::euclidean(pts), 0.0, 20);
    CHECK(a.num_clusters == 1);
    CHECK(largest_cluster(a)->members.size() == 20);
  }

  TEST_CASE("clusters are numbered by size, ties by smallest member") {
    // Groups: {0,1} size 2, {2,3,4} size 3, {5,6} size 2.
    std::vector<std::vector<double>> pts{{0, 0}, {0, 0.1}, {10, 0}, {10, 0.1}, {10, 0.2}, {20, 0}, {20, 0.1}};
    const auto a = dbscan(DistanceMatrix::euclidean(pts), 0.5, 2);
    CHECK(a.labels == std::vector<int>{1, 1, 0, 0, 0, 2, 2});
  }

  TEST_CASE("border point reachable from two clusters goes to the lower core index") {
    // A chain 0-1-2-3-4: at min_pts 3 the middle point is core and joins both sides.
    const double e = 1.0, far = 9.0;
    // clang-format off
    const auto d = DistanceMatrix::from_dense(5, {
        0,   e,   far, far, far,
        e,   0,   e,   far, far,
        far, e,   0,   e,   far,
        far, far, e,   0,   e,
        far, far, far, e,   0});
    // clang-format on
    auto a = dbscan(d, e, 3);
    CHECK(a.core[1]);
    CHECK(a.core[2]);
    CHECK(a.num_clusters == 1);

    // At min_pts 4 point 2 (neighbours 1, 2, 3) is a border point; 1 and 3
    // stay core through private neighbours 5 and 6.
    // clang-format off
    const auto d2 = DistanceMatrix::from_dense(7, {
        0,   e,   far, far, far, e,   far,
        e,   0,   e,   far, far, e,   far,
        far, e,   0,   e,   far, far, far,
        far, far, e,   0,   e,   far, e,
        far, far, far, e,   0,   far, e,
        e,   e,   far, far, far, 0,   far,
        far, far, far, e,   e,   far, 0});
    // clang-format on
    a = dbscan(d2, e, 4);
    CHECK_FALSE(a.core[2]);
    CHECK(a.core[1]);
    CHECK(a.core[3]);
    CHECK(a.num_clusters == 2);
    CHECK(a.labels[2] == a.labels[1]);
    CHECK(a.labels[2] != a.labels[3]);
    const auto ref = oracle::dbscan([&] {
      std::vector<std::vector<double>> m(7, std::vector<double>(7));
      for (std::size_t i = 0; i < 7; ++i)
        for (std::size_t j = 0; j < 7; ++j) m[i][j] = d2(i, j);
      return m;
    }(), e, 4);
    CHECK(ref.labels == a.labels);
  }

  TEST_CASE("matches the brute-force oracle on random instances") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::size_t> size(1, 40), mp(1, 6);
    std::uniform_real_distribution<double> eps(0.0, 4.0);
    for (int trial = 0; trial < 300; ++trial) {
      const auto dense = oracle::random_instance(rng, size(rng));
      const double e = eps(rng);
      const std::size_t m = mp(rng);
      const auto got = dbscan(oracle::to_matrix(dense), e, m);
      const auto ref = oracle::dbscan(dense, e, m);
      REQUIRE(got.labels == ref.labels);
      REQUIRE(got.core == ref.core);
    }
  }

  TEST_CASE("core set and core partition are invariant under permutation") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 100; ++trial) {
      const std::size_t n = 25;
      const auto dense = oracle::random_instance(rng, n);
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      std::vector<std::vector<double>> permuted(n, std::vector<double>(n));
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) permuted[i][j] = dense[perm[i]][perm[j]];
      const auto a = dbscan(oracle::to_matrix(dense), 2.5, 3);
      const auto b = dbscan(oracle::to_matrix(permuted), 2.5, 3);
      // Restrict to core points: border assignment may legitimately depend
      // on the index order.
      std::vector<int> core_a(n, -1), core_b(n, -1);
      for (std::size_t i = 0; i < n; ++i) {
        CHECK(b.core[i] == a.core[perm[i]]);
        if (a.core[perm[i]]) core_a[i] = a.labels[perm[i]];
        if (b.core[i]) core_b[i] = b.labels[i];
      }
      CHECK(a.num_clusters == b.num_clusters);
      CHECK(partition(core_a) == partition(core_b));
    }
  }

  TEST_CASE("growing eps never creates noise out of clustered points") {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
      const auto d = oracle::to_matrix(oracle::random_instance(rng, 30));
      std::size_t prev_noise = 31;
      for (double e : {0.5, 1.0, 2.0, 3.0, 5.0, 8.0, 20.0}) {
        const auto a = dbscan(d, e, 3);
        const auto noise =
            static_cast<std::size_t>(std::count(a.labels.begin(), a.labels.end(), ClusterAssignment::kNoise));
        CHECK(noise <= prev_noise);
        prev_noise = noise;
      }
      CHECK(dbscan(d, d.max_value(), 3).num_clusters == 1);
    }
  }

  TEST_CASE("largest_cluster breaks ties by smallest point index") {
    ClusterAssignment a;
    a.labels = {1, 0, 1, 0, -1};
    a.num_clusters = 2;
    const auto best = largest_cluster(a);
    REQUIRE(best);
    CHECK(best->label == 1);  // holds index 0
    CHECK(best->members == std::vector<std::size_t>{0, 2});

    a.labels = {0, 1, 1, 0, 1};
    CHECK(largest_cluster(a)->label == 1);
    a.labels = {-1, 0, 1, 1, 0};
    CHECK(largest_cluster(a)->label == 0);
  }

  TEST_CASE("template from 12 faces and 5 outliers") {
    std::mt19937_64 rng(8);
    std::vector<Embedding> faces;
    const auto poi = oracle_unit(rng, 16);
    for (int i = 0; i < 12; ++i) {
      auto v = poi;
      std::normal_distribution<double> g(0.0, 0.02);
      for (auto& x : v) x += g(rng);
      faces.push_back(face("poi" + std::to_string(i), v));
    }
    for (int i = 0; i < 5; ++i) faces.push_back(face("out" + std::to_string(i), oracle_unit(rng, 16)));
    const auto r = build_template(SpeakerId("s"), faces);
    REQUIRE(std::holds_alternative<TemplateFace>(r));
    const auto& t = std::get<TemplateFace>(r);
    CHECK(t.support == 12);
    double dot = 0, norm = 0;
    for (std::size_t k = 0; k < 16; ++k) {
      dot += t.vector.values[k] * poi[k];
      norm += t.vector.values[k] * t.vector.values[k];
    }
    CHECK(dot / std::sqrt(norm) > 0.99);
  }

  TEST_CASE("template rejected when the largest cluster has 9 faces") {
    std::mt19937_64 rng(9);
    const auto poi = oracle_unit(rng, 16);
    std::vector<Embedding> faces;
    for (int i = 0; i < 9; ++i) faces.push_back(face("p" + std::to_string(i), poi));
    for (int i = 0; i < 6; ++i) faces.push_back(face("o" + std::to_string(i), oracle_unit(rng, 16)));
    const auto r = build_template(SpeakerId("s"), faces);
    REQUIRE(std::holds_alternative<TemplateRejection>(r));
    CHECK(std::get<TemplateRejection>(r).largest_support == 9);

    faces.push_back(face("p9", poi));
    CHECK(std::holds_alternative<TemplateFace>(build_template(SpeakerId("s"), faces)));
  }

  TEST_CASE("template with no faces is rejected") {
    const auto r = build_template(SpeakerId("s"), std::span<const Embedding>{});
    REQUIRE(std::holds_alternative<TemplateRejection>(r));
    CHECK(std::get<TemplateRejection>(r).largest_support == 0);
  }
}
