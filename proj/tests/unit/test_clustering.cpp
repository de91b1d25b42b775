#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <optional>
#include <random>

#include "oracles.hpp"
#include "taxoforge/clustering.hpp"
#include "taxoforge/embedding.hpp"

using namespace taxoforge;
using Catch::Approx;

namespace {

DistanceMatrix line(std::initializer_list<double> xs) {
  std::vector<double> v(xs);
  DistanceMatrix dm(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) dm.set(i, j, std::abs(v[i] - v[j]));
  }
  return dm;
}

DistanceMatrix random_points(std::mt19937_64& rng, std::size_t n, std::size_t dim = 3) {
  std::uniform_real_distribution<double> u(0.0, 10.0);
  std::vector<EmbeddingVector> pts(n);
  for (auto& p : pts) {
    for (std::size_t k = 0; k < dim; ++k) p.values.push_back(static_cast<float>(u(rng)));
  }
  return euclidean_matrix(pts);
}

// Blobs of `per` points around centres spaced `gap` apart on a line.
DistanceMatrix blobs(std::size_t count, std::size_t per, double gap, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(0.0, 0.05);
  std::vector<EmbeddingVector> pts;
  for (std::size_t b = 0; b < count; ++b) {
    for (std::size_t i = 0; i < per; ++i) {
      pts.push_back({{static_cast<float>(gap * b + jitter(rng)), static_cast<float>(jitter(rng))}});
    }
  }
  return euclidean_matrix(pts);
}

}  // namespace

TEST_CASE("distance matrix validation", "[clustering]") {
  DistanceMatrix dm(3);
  CHECK_THROWS_AS(dm.set(0, 1, -1.0), InvalidArgument);
  CHECK_THROWS_AS(dm.set(0, 1, std::nan("")), InvalidArgument);
  CHECK_THROWS_AS(dm.set(0, 3, 1.0), InvalidArgument);
  dm.set(2, 0, 4.0);
  CHECK(dm(0, 2) == 4.0);
  CHECK(dm(2, 0) == 4.0);
  CHECK(dm(1, 1) == 0.0);
}

TEST_CASE("euclidean matrix", "[clustering]") {
  const std::vector<EmbeddingVector> v{{{0, 0}}, {{3, 4}}, {{0, 0}}};
  const auto dm = euclidean_matrix(v);
  CHECK(dm(0, 1) == 5.0);
  CHECK(dm(0, 2) == 0.0);
  const std::vector<EmbeddingVector> bad{{{0, 0}}, {{1}}};
  CHECK_THROWS_AS(euclidean_matrix(bad), DimensionMismatch);

  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<EmbeddingVector> pts(10);
  for (auto& p : pts) {
    for (int k = 0; k < 7; ++k) p.values.push_back(static_cast<float>(g(rng)));
  }
  const auto m = euclidean_matrix(pts);
  for (std::size_t i = 0; i < 10; ++i) {
    for (std::size_t j = 0; j < 10; ++j) {
      double s = 0.0;
      for (int k = 0; k < 7; ++k) {
        const double d = static_cast<double>(pts[i].values[k]) - static_cast<double>(pts[j].values[k]);
        s += d * d;
      }
      CHECK(m(i, j) == Approx(std::sqrt(s)).margin(1e-12));
    }
  }
}

TEST_CASE("agglomerate on points of a line", "[clustering]") {
  const auto dm = line({0, 1, 10});
  const auto den = agglomerate(dm, Linkage::average);
  REQUIRE(den.merges.size() == 2);
  CHECK(den.merges[0] == Merge{0, 1, 1.0, 2});
  CHECK(den.merges[1] == Merge{2, 3, 9.5, 3});
  // complete and single linkage of the same points
  CHECK(agglomerate(dm, Linkage::complete).merges[1].height == 10.0);
  CHECK(agglomerate(dm, Linkage::single).merges[1].height == 9.0);

  const auto two = agglomerate(line({2, 5}));
  REQUIRE(two.merges.size() == 1);
  CHECK(two.merges[0].height == 3.0);
  CHECK_THROWS_AS(agglomerate(DistanceMatrix(1)), InvalidArgument);
}

TEST_CASE("ties merge the smallest id pair first", "[clustering]") {
  const auto den = agglomerate(line({0, 1, 2, 3}), Linkage::single);
  CHECK(den.merges[0] == Merge{0, 1, 1.0, 2});
  CHECK(den.merges[1] == Merge{2, 3, 1.0, 2});
  CHECK(den.merges[2] == Merge{4, 5, 1.0, 4});
}

TEST_CASE("agglomerate matches the naive reference", "[clustering]") {
  std::mt19937_64 rng(2);
  for (auto linkage : {Linkage::average, Linkage::complete, Linkage::single}) {
    for (int trial = 0; trial < 20; ++trial) {
      const std::size_t n = 2 + rng() % 30;
      const auto dm = random_points(rng, n);
      const auto fast = agglomerate(dm, linkage).merges;
      const auto slow = oracle::naive_agglomerate(dm, linkage);
      REQUIRE(fast.size() == slow.size());
      for (std::size_t i = 0; i < fast.size(); ++i) {
        CHECK(fast[i].left == slow[i].left);
        CHECK(fast[i].right == slow[i].right);
        CHECK(fast[i].size == slow[i].size);
        CHECK(std::abs(fast[i].height - slow[i].height) <= 1e-9);
      }
      for (std::size_t i = 1; i < fast.size(); ++i) CHECK(fast[i].height >= fast[i - 1].height);
    }
  }
}

TEST_CASE("cut", "[clustering]") {
  const auto den = agglomerate(line({0, 1, 10}));
  CHECK(cut(den, 100.0).k == 1);
  CHECK(cut(den, 0.5).k == 3);
  const auto mid = cut(den, 5.0);
  CHECK(mid.k == 2);
  CHECK(mid.labels == std::vector<std::size_t>{0, 0, 1});
  CHECK(cut(den, 1.0).k == 2);  // merges at exactly the height are kept
  CHECK_THROWS_AS(cut(den, -1.0), InvalidArgument);
}

TEST_CASE("cuts are monotone in height", "[clustering]") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto dm = random_points(rng, 20);
    const auto den = agglomerate(dm);
    const auto levels = cut_levels(den);
    for (std::size_t l = 1; l < levels.size(); ++l) {
      const auto& coarse = levels[l - 1].clustering;
      const auto& fine = levels[l].clustering;
      CHECK(fine.k > coarse.k);
      // Same fine label implies same coarse label.
      for (std::size_t i = 0; i < 20; ++i) {
        for (std::size_t j = 0; j < 20; ++j) {
          if (fine.labels[i] == fine.labels[j]) CHECK(coarse.labels[i] == coarse.labels[j]);
        }
      }
    }
  }
}

TEST_CASE("silhouette", "[clustering]") {
  std::mt19937_64 rng(4);
  const auto dm = blobs(2, 5, 20.0, rng);
  const auto fc = canonical_labels(std::vector<std::size_t>{0, 0, 0, 0, 0, 1, 1, 1, 1, 1});
  CHECK(silhouette(dm, fc) > 0.9);
  CHECK(silhouette(dm, canonical_labels(std::vector<std::size_t>(10, 0))) == kSilhouetteUndefined);
  std::vector<std::size_t> all(10);
  std::iota(all.begin(), all.end(), 0);
  CHECK(silhouette(dm, canonical_labels(all)) == kSilhouetteUndefined);

  for (int trial = 0; trial < 30; ++trial) {
    const auto pts = random_points(rng, 30);
    std::vector<std::size_t> labels(30);
    for (auto& l : labels) l = rng() % 5;
    const auto fc2 = canonical_labels(labels);
    const double s = silhouette(pts, fc2);
    CHECK(std::abs(s - oracle::silhouette(pts, fc2.labels)) <= 1e-12);
    if (s != kSilhouetteUndefined) {
      CHECK(s >= -1.0);
      CHECK(s <= 1.0);
    }
  }
}

TEST_CASE("select_k", "[clustering]") {
  std::mt19937_64 rng(5);
  const auto dm = blobs(3, 6, 30.0, rng);
  const auto den = agglomerate(dm);
  const auto sel = select_k(dm, den, 2, 10);
  CHECK(sel.k == 3);
  CHECK(sel.clustering.k == 3);

  const auto small = line({0, 1, 5});
  CHECK(select_k(small, agglomerate(small), 2, 2).k == 2);
  CHECK_THROWS_AS(select_k(small, agglomerate(small), 1, 2), InvalidArgument);
  CHECK_THROWS_AS(select_k(small, agglomerate(small), 2, 3), InvalidArgument);

  // Only one merge height: the sole reachable k is 1, which is out of range.
  const auto flat = line({0, 0, 0, 0});
  CHECK_THROWS_AS(select_k(flat, agglomerate(flat), 2, 3), NoValidK);
}

TEST_CASE("select_k agrees with an exhaustive scan and ignores scale", "[clustering]") {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 25; ++trial) {
    DistanceMatrix dm = trial % 5 == 0 ? line({0, 1, 2, 3, 4, 5, 6, 7}) : random_points(rng, 12);
    const auto den = agglomerate(dm);
    const std::size_t hi = dm.size() - 1;
    // Exhaustive: every cut height, keep the best silhouette, smallest k on ties.
    std::size_t best_k = 0;
    double best_s = -2.0;
    std::vector<double> heights;
    for (const auto& m : den.merges) heights.push_back(m.height);
    for (std::size_t k = 2; k <= hi; ++k) {
      std::optional<FlatClustering> fc;
      for (double h : heights) {
        auto c = cut(den, h);
        if (c.k == k) fc = c;
      }
      if (!fc) continue;
      const double s = oracle::silhouette(dm, fc->labels);
      if (s > best_s) {
        best_s = s;
        best_k = k;
      }
    }
    const auto sel = select_k(dm, den, 2, hi);
    CHECK(sel.k == best_k);
    const auto scaled = dm.scaled(3.5);
    CHECK(select_k(scaled, agglomerate(scaled), 2, hi).k == sel.k);
  }
}
