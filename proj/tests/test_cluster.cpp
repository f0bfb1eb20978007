#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "trigraph/cluster.hpp"
#include "trigraph/error.hpp"

using namespace trigraph;

namespace {

Matrix random_rows(Rng& rng, std::size_t n, std::size_t k) {
  Matrix m(n, k);
  for (double& v : m.values()) v = rng.uniform(-1.0, 1.0);
  return m;
}

DistanceMatrix from_points(const std::vector<double>& xs) {
  DistanceMatrix d(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    for (std::size_t j = i + 1; j < xs.size(); ++j) d.set(i, j, std::abs(xs[i] - xs[j]));
  }
  return d;
}

// Small integer distances force many ties.
DistanceMatrix random_integer_matrix(Rng& rng, std::size_t n) {
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, static_cast<double>(1 + rng.below(4)));
  }
  return d;
}

void check_against_oracle(const DistanceMatrix& d) {
  const auto dg = hac_group_average(d);
  const auto want = oracle::upgma(d.size(), [&](std::uint32_t i, std::uint32_t j) { return d(i, j); });
  REQUIRE(dg.merges.size() == want.size());
  for (std::size_t s = 0; s < want.size(); ++s) {
    CHECK(dg.merges[s].left == want[s].left);
    CHECK(dg.merges[s].right == want[s].right);
    CHECK(dg.merges[s].id == want[s].id);
    CHECK(dg.merges[s].distance == doctest::Approx(want[s].distance).epsilon(1e-12));
  }
}

// Every cluster of `fine` lies inside one cluster of `coarse`.
bool refines(const ClusterAssignment& fine, const ClusterAssignment& coarse) {
  std::vector<std::uint32_t> image(fine.n_clusters, UINT32_MAX);
  for (std::size_t i = 0; i < fine.labels.size(); ++i) {
    auto& slot = image[fine.labels[i]];
    if (slot == UINT32_MAX) slot = coarse.labels[i];
    if (slot != coarse.labels[i]) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("distances between rows") {
  Matrix m(4, 2);
  m(0, 0) = 1;
  m(1, 0) = 1;
  m(2, 1) = 3;
  const auto cos = pairwise_distances(m, Metric::Cosine);
  CHECK(cos(0, 1) == 0.0);
  CHECK(cos(0, 2) == doctest::Approx(1.0));
  CHECK(cos(3, 0) == 1.0);  // zero row
  CHECK(cos(3, 3) == 0.0);
  const auto euc = pairwise_distances(m, Metric::Euclidean);
  CHECK(euc(0, 2) == doctest::Approx(std::sqrt(10.0)));
  CHECK(euc(1, 0) == 0.0);
}

TEST_CASE("distances match an independent implementation") {
  Rng rng(21);
  const auto m = random_rows(rng, 40, 7);
  const auto cos = pairwise_distances(m, Metric::Cosine);
  const auto euc = pairwise_distances(m, Metric::Euclidean);
  for (std::size_t i = 0; i < 40; ++i) {
    for (std::size_t j = 0; j < 40; ++j) {
      double dot = 0, nu = 0, nv = 0, sq = 0;
      for (std::size_t c = 0; c < 7; ++c) {
        dot += m(i, c) * m(j, c);
        nu += m(i, c) * m(i, c);
        nv += m(j, c) * m(j, c);
        sq += (m(i, c) - m(j, c)) * (m(i, c) - m(j, c));
      }
      const double want = i == j ? 0.0 : 1.0 - dot / std::sqrt(nu * nv);
      CHECK(std::abs(cos(i, j) - want) < 1e-12);
      CHECK(std::abs(euc(i, j) - std::sqrt(sq)) < 1e-12);
      CHECK(cos(i, j) == cos(j, i));
    }
  }
}

TEST_CASE("metric names") {
  CHECK(parse_metric("cosine") == Metric::Cosine);
  CHECK(std::string(metric_name(parse_metric("euclidean"))) == "euclidean");
  CHECK_THROWS_AS(parse_metric("manhattan"), ConfigError);
}

TEST_CASE("hac edge sizes") {
  CHECK_THROWS_AS(hac_group_average(DistanceMatrix(0)), RangeError);
  const auto one = hac_group_average(DistanceMatrix(1));
  CHECK(one.n_leaves == 1);
  CHECK(one.merges.empty());
  CHECK(cut(one, 1).labels == std::vector<std::uint32_t>{0});
}

TEST_CASE("three points on a line") {
  const auto dg = hac_group_average(from_points({0, 1, 10}));
  REQUIRE(dg.merges.size() == 2);
  CHECK(dg.merges[0] == Merge{0, 1, 1.0, 3});
  CHECK(dg.merges[1] == Merge{2, 3, 9.5, 4});
}

TEST_CASE("ties go to the smallest id pair") {
  const auto dg = hac_group_average(from_points({0, 1, 2, 3}));
  CHECK(dg.merges[0].left == 0);
  CHECK(dg.merges[0].right == 1);
  CHECK(dg.merges[1].left == 2);
  CHECK(dg.merges[1].right == 3);
}

TEST_CASE("hac matches brute-force UPGMA") {
  Rng rng(22);
  for (int trial = 0; trial < 150; ++trial) {
    const std::size_t n = 2 + rng.below(7);
    if (trial % 2) {
      check_against_oracle(random_integer_matrix(rng, n));
    } else {
      check_against_oracle(pairwise_distances(random_rows(rng, n, 3), Metric::Euclidean));
    }
  }
}

TEST_CASE("dendrogram structure and monotone merge distances") {
  Rng rng(23);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 2 + rng.below(60);
    const auto dg = hac_group_average(pairwise_distances(random_rows(rng, n, 4), Metric::Cosine));
    REQUIRE(dg.merges.size() == n - 1);
    std::vector<int> used(2 * n - 1, 0);
    for (std::size_t s = 0; s < dg.merges.size(); ++s) {
      const auto& m = dg.merges[s];
      CHECK(m.id == n + s);
      CHECK(m.left < m.right);
      CHECK(m.right < m.id);
      ++used[m.left];
      ++used[m.right];
      if (s) CHECK(m.distance >= dg.merges[s - 1].distance - 1e-12);
    }
    for (std::size_t v = 0; v + 1 < used.size(); ++v) CHECK(used[v] == 1);
    CHECK(used.back() == 0);
  }
}

TEST_CASE("cut extremes and range errors") {
  Rng rng(24);
  const auto dg = hac_group_average(pairwise_distances(random_rows(rng, 9, 3), Metric::Cosine));
  for (auto l : cut(dg, 1).labels) CHECK(l == 0);
  std::vector<std::uint32_t> identity(9);
  std::iota(identity.begin(), identity.end(), 0u);
  CHECK(cut(dg, 9).labels == identity);
  CHECK_THROWS_AS(cut(dg, 0), RangeError);
  CHECK_THROWS_AS(cut(dg, 10), RangeError);
}

TEST_CASE("cuts are dense, ordered by smallest leaf, and nested") {
  Rng rng(25);
  for (int trial = 0; trial < 40; ++trial) {
    const std::uint32_t n = 2 + static_cast<std::uint32_t>(rng.below(40));
    const auto dg = hac_group_average(pairwise_distances(random_rows(rng, n, 3), Metric::Cosine));
    std::vector<ClusterAssignment> cuts;
    for (std::uint32_t l = 1; l <= n; ++l) {
      auto a = cut(dg, l);
      CHECK(a.n_clusters == l);
      std::uint32_t next = 0;
      for (auto label : a.labels) {
        CHECK(label <= next);
        if (label == next) ++next;
      }
      CHECK(next == l);
      cuts.push_back(std::move(a));
    }
    for (std::uint32_t l = 1; l < n; ++l) CHECK(refines(cuts[l], cuts[l - 1]));
  }
}

TEST_CASE("permuting rows permutes the clustering") {
  Rng rng(26);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 3 + rng.below(30);
    const auto rows = random_rows(rng, n, 4);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    for (std::size_t i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below(i + 1)]);
    Matrix shuffled(n, 4);
    for (std::size_t i = 0; i < n; ++i) {
      std::copy(rows.row(perm[i]).begin(), rows.row(perm[i]).end(), shuffled.row(i).begin());
    }
    const auto l = static_cast<std::uint32_t>(1 + rng.below(n));
    const auto a = cut(hac_group_average(pairwise_distances(rows, Metric::Cosine)), l);
    const auto b = cut(hac_group_average(pairwise_distances(shuffled, Metric::Cosine)), l);
    // Same partition: row i of `shuffled` is row perm[i] of `rows`.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        CHECK((b.labels[i] == b.labels[j]) == (a.labels[perm[i]] == a.labels[perm[j]]));
      }
    }
  }
}

TEST_CASE("zero rows are shed last under cosine") {
  Matrix m(5, 2);
  m(0, 0) = 1;
  m(1, 0) = 0.9;
  m(1, 1) = 0.1;
  m(2, 1) = 1;
  m(3, 1) = 0.8;
  const auto a = cut(hac_group_average(pairwise_distances(m, Metric::Cosine)), 3);
  CHECK(a.labels == std::vector<std::uint32_t>{0, 0, 1, 1, 2});
}

TEST_CASE("csv output and assignment parsing") {
  const auto dg = hac_group_average(from_points({0, 1, 10}));
  std::ostringstream dout;
  write_dendrogram_csv(dg, dout);
  CHECK(dout.str() == "left,right,distance,new_id\n0,1,1,3\n2,3,9.5,4\n");

  std::ostringstream aout;
  write_assignment_csv(cut(dg, 2), {"x", "y", "z"}, aout);
  CHECK(aout.str() == "doc_key,cluster_id\nx,0\ny,0\nz,1\n");
  std::istringstream ain(aout.str());
  const auto rows = read_assignment_csv(ain);
  REQUIRE(rows.size() == 3);
  CHECK(rows[2] == std::pair<std::string, std::uint32_t>{"z", 1});

  std::istringstream bad("doc_key,cluster_id\nx,zero\n");
  CHECK_THROWS_AS(read_assignment_csv(bad), ParseError);
  CHECK_THROWS_AS(write_assignment_csv(cut(dg, 2), {"x"}, aout), ContractViolation);
}
