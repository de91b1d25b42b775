#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "taxoforge/embedding.hpp"
#include "taxoforge/error.hpp"

namespace taxoforge {

// Dense symmetric matrix with a zero diagonal.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

  std::size_t size() const noexcept { return n_; }

  double operator()(std::size_t i, std::size_t j) const noexcept { return d_[i * n_ + j]; }

  void set(std::size_t i, std::size_t j, double v) {
    if (i >= n_ || j >= n_) throw InvalidArgument("distance matrix index out of range");
    if (i == j) {
      if (v != 0.0) throw InvalidArgument("distance matrix diagonal must be zero");
      return;
    }
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("distances must be finite and >= 0");
    d_[i * n_ + j] = v;
    d_[j * n_ + i] = v;
  }

  DistanceMatrix scaled(double c) const {
    DistanceMatrix out = *this;
    for (double& v : out.d_) v *= c;
    return out;
  }

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

inline DistanceMatrix euclidean_matrix(std::span<const EmbeddingVector> vectors) {
  if (vectors.empty()) throw InvalidArgument("need at least one vector");
  const std::size_t dim = vectors.front().dim();
  for (const auto& v : vectors) {
    if (v.dim() != dim) throw DimensionMismatch(dim, v.dim());
  }
  DistanceMatrix dm(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double diff = static_cast<double>(vectors[i].values[k]) - vectors[j].values[k];
        s += diff * diff;
      }
      dm.set(i, j, std::sqrt(s));
    }
  }
  return dm;
}

enum class Linkage { average, complete, single };

inline std::string_view to_string(Linkage l) {
  switch (l) {
    case Linkage::average: return "average";
    case Linkage::complete: return "complete";
    case Linkage::single: return "single";
  }
  return "average";
}

inline Linkage parse_linkage(std::string_view s) {
  if (s == "average") return Linkage::average;
  if (s == "complete") return Linkage::complete;
  if (s == "single") return Linkage::single;
  throw InvalidArgument("unknown linkage '" + std::string(s) + "'");
}

// Node ids follow the usual convention: leaves are 0..n-1 and the i-th merge
// creates node n+i.
struct Merge {
  std::size_t left = 0;   // smaller child id
  std::size_t right = 0;  // larger child id
  double height = 0.0;
  std::size_t size = 0;

  friend bool operator==(const Merge&, const Merge&) = default;
};

struct Dendrogram {
  std::vector<Merge> merges;
  std::size_t leaf_count = 0;
};

// Standard agglomerative clustering with Lance-Williams updates. Each active
// cluster caches its nearest neighbour; only rows touched by a merge are
// rescanned. Ties go to the pair with the smallest (min id, max id).
inline Dendrogram agglomerate(const DistanceMatrix& dm, Linkage linkage = Linkage::average) {
  const std::size_t n = dm.size();
  if (n < 2) throw InvalidArgument("agglomerate needs at least two items");

  std::vector<double> d(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) d[i * n + j] = dm(i, j);
  }
  std::vector<std::size_t> node(n);  // slot -> node id
  std::iota(node.begin(), node.end(), 0);
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);

  using Key = std::tuple<double, std::size_t, std::size_t>;  // (dist, min id, max id)
  auto key = [&](std::size_t a, std::size_t b) {
    return Key{d[a * n + b], std::min(node[a], node[b]), std::max(node[a], node[b])};
  };
  std::vector<std::size_t> nn(n, n);
  auto rescan = [&](std::size_t a) {
    nn[a] = n;
    for (std::size_t b = 0; b < n; ++b) {
      if (b == a || !active[b]) continue;
      if (nn[a] == n || key(a, b) < key(a, nn[a])) nn[a] = b;
    }
  };
  for (std::size_t a = 0; a < n; ++a) rescan(a);

  Dendrogram den;
  den.leaf_count = n;
  den.merges.reserve(n - 1);
  double last_height = 0.0;
  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t a = n;
    for (std::size_t s = 0; s < n; ++s) {
      if (!active[s] || nn[s] == n) continue;
      if (a == n || key(s, nn[s]) < key(a, nn[a])) a = s;
    }
    std::size_t b = nn[a];
    if (node[b] < node[a]) std::swap(a, b);

    // Lance-Williams can round an average one ulp below the previous height.
    const double h = std::max(d[a * n + b], last_height);
    last_height = h;
    den.merges.push_back({node[a], node[b], h, size[a] + size[b]});

    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a || k == b) continue;
      const double da = d[a * n + k];
      const double db = d[b * n + k];
      double v = 0.0;
      switch (linkage) {
        case Linkage::single: v = std::min(da, db); break;
        case Linkage::complete: v = std::max(da, db); break;
        case Linkage::average:
          v = (static_cast<double>(size[a]) * da + static_cast<double>(size[b]) * db) /
              static_cast<double>(size[a] + size[b]);
          break;
      }
      d[a * n + k] = v;
      d[k * n + a] = v;
    }
    active[b] = false;
    size[a] += size[b];
    node[a] = n + step;

    rescan(a);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == a) continue;
      if (nn[k] == a || nn[k] == b) {
        rescan(k);
      } else if (key(k, a) < key(k, nn[k])) {
        nn[k] = a;
      }
    }
  }
  return den;
}

struct FlatClustering {
  std::vector<std::size_t> labels;  // one per item
  std::size_t k = 0;

  friend bool operator==(const FlatClustering&, const FlatClustering&) = default;
};

// Relabels so cluster ids appear in order of each cluster's first item.
inline FlatClustering canonical_labels(std::span<const std::size_t> raw) {
  FlatClustering fc;
  fc.labels.resize(raw.size());
  std::vector<std::pair<std::size_t, std::size_t>> seen;  // raw -> canonical
  for (std::size_t i = 0; i < raw.size(); ++i) {
    auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.first == raw[i]; });
    if (it == seen.end()) {
      seen.emplace_back(raw[i], seen.size());
      fc.labels[i] = seen.back().second;
    } else {
      fc.labels[i] = it->second;
    }
  }
  fc.k = seen.size();
  return fc;
}

// Connected components of all merges with height <= `height`.
inline FlatClustering cut(const Dendrogram& den, double height) {
  if (height < 0.0) throw InvalidArgument("cut height must be >= 0");
  const std::size_t n = den.leaf_count;
  std::vector<std::size_t> parent(n + den.merges.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  for (std::size_t i = 0; i < den.merges.size(); ++i) {
    const auto& m = den.merges[i];
    if (m.height > height) continue;
    parent[find(m.left)] = n + i;
    parent[find(m.right)] = n + i;
  }
  std::vector<std::size_t> raw(n);
  for (std::size_t i = 0; i < n; ++i) raw[i] = find(i);
  return canonical_labels(raw);
}

inline std::vector<std::vector<std::size_t>> cluster_members(const FlatClustering& fc) {
  std::vector<std::vector<std::size_t>> out(fc.k);
  for (std::size_t i = 0; i < fc.labels.size(); ++i) out[fc.labels[i]].push_back(i);
  return out;
}

inline constexpr double kSilhouetteUndefined = -1.0;

// Mean silhouette. Items in singleton clusters score 0; k outside [2, n-1]
// yields the -1 sentinel.
inline double silhouette(const DistanceMatrix& dm, const FlatClustering& fc) {
  const std::size_t n = dm.size();
  if (fc.labels.size() != n) throw InvalidArgument("clustering does not match distance matrix");
  if (fc.k < 2 || fc.k + 1 > n) return kSilhouetteUndefined;
  std::vector<std::size_t> count(fc.k, 0);
  for (auto l : fc.labels) ++count[l];
  // sums[i * k + c] = sum of distances from i to members of c
  std::vector<double> sums(n * fc.k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double v = dm(i, j);
      sums[i * fc.k + fc.labels[j]] += v;
      sums[j * fc.k + fc.labels[i]] += v;
    }
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t own = fc.labels[i];
    if (count[own] == 1) continue;
    const double a = sums[i * fc.k + own] / static_cast<double>(count[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < fc.k; ++c) {
      if (c == own) continue;
      b = std::min(b, sums[i * fc.k + c] / static_cast<double>(count[c]));
    }
    const double denom = std::max(a, b);
    if (denom > 0.0) total += (b - a) / denom;
  }
  return total / static_cast<double>(n);
}

// The distinct flat clusterings a dendrogram admits, one per distinct merge
// height, ordered from the highest cut (fewest clusters) down.
struct CutLevel {
  double height = 0.0;
  FlatClustering clustering;
};

inline std::vector<CutLevel> cut_levels(const Dendrogram& den) {
  std::vector<double> heights;
  for (const auto& m : den.merges) heights.push_back(m.height);
  std::sort(heights.begin(), heights.end());
  heights.erase(std::unique(heights.begin(), heights.end()), heights.end());
  std::vector<CutLevel> out;
  out.reserve(heights.size());
  for (auto it = heights.rbegin(); it != heights.rend(); ++it) out.push_back({*it, cut(den, *it)});
  return out;
}

struct KSelection {
  std::size_t k = 0;
  FlatClustering clustering;
  double silhouette = kSilhouetteUndefined;
};

// For each k in [lo, hi] reachable by a cut, scores the clustering with the
// silhouette; the best k wins, smallest k on ties.
inline KSelection select_k(const DistanceMatrix& dm, const Dendrogram& den, std::size_t lo, std::size_t hi) {
  const std::size_t n = dm.size();
  if (lo < 2 || lo > hi || hi + 1 > n) {
    throw InvalidArgument("k range must satisfy 2 <= lo <= hi <= n-1");
  }
  std::optional<KSelection> best;
  // A clustering with k clusters is produced by every height in
  // [h_j, h_{j+1}); taking the level for each k is the same as taking the
  // largest such height.
  for (auto& level : cut_levels(den)) {
    const std::size_t k = level.clustering.k;
    if (k < lo || k > hi) continue;
    const double s = silhouette(dm, level.clustering);
    if (!best || s > best->silhouette || (s == best->silhouette && k < best->k)) {
      best = KSelection{k, std::move(level.clustering), s};
    }
  }
  if (!best) throw NoValidK();
  return *best;
}

// Default upper bound for k: min(50, n-1).
inline std::size_t default_k_max(std::size_t n) { return std::min<std::size_t>(50, n == 0 ? 0 : n - 1); }

}  // namespace taxoforge
