#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taxoforge/clustering.hpp"
#include "taxoforge/corpus.hpp"
#include "taxoforge/embedding.hpp"
#include "taxoforge/error.hpp"
#include "taxoforge/taxonomy.hpp"

namespace taxoforge {

struct TopLevelType {
  std::string id;
  std::vector<std::string> member_tables;  // sorted
  std::vector<std::string> attributes;     // ConceptualAttribute ids
};

struct ConceptualAttribute {
  std::string id;
  std::vector<ColumnRef> member_columns;
};

struct PruningParams {
  double delta = 0.15;
  std::size_t min_cluster_size = 2;
};

struct EmttOptions {
  Linkage linkage = Linkage::average;
  SerializationSpec serialization{};
  PruningParams pruning{};
  std::size_t k_cap = 50;  // k range is (2, min(k_cap, n-1))
};

// Outcome of silhouette-driven flat clustering over n items.
struct ItemClustering {
  FlatClustering clustering;
  double silhouette = kSilhouetteUndefined;
  bool selected = false;  // false: no k was admissible, everything is one cluster
};

// Agglomerate + select_k over (2, min(k_cap, n-1)). With fewer than three
// items, or when no k in range is reachable, all items form one cluster.
inline ItemClustering cluster_items(const DistanceMatrix& dm, Linkage linkage, std::size_t k_cap = 50) {
  const std::size_t n = dm.size();
  ItemClustering out;
  out.clustering.labels.assign(n, 0);
  out.clustering.k = n == 0 ? 0 : 1;
  if (n < 3) return out;
  const std::size_t hi = std::min(k_cap, n - 1);
  if (hi < 2) return out;
  const Dendrogram den = agglomerate(dm, linkage);
  try {
    auto sel = select_k(dm, den, 2, hi);
    out.clustering = std::move(sel.clustering);
    out.silhouette = sel.silhouette;
    out.selected = true;
  } catch (const NoValidK&) {
  }
  return out;
}

namespace detail {

inline void require_subject_columns(const Corpus& corpus) {
  for (const auto& t : corpus.tables) {
    if (!t.subject_col) throw InvalidArgument("table '" + t.id + "' has no subject column");
  }
}

}  // namespace detail

struct TopLevelResult {
  std::vector<TopLevelType> types;
  ItemClustering clustering;  // over corpus.tables order
};

// Clusters tables by the embeddings of their subject columns.
inline TopLevelResult identify_top_level(const Corpus& corpus, EmbeddingProvider& provider,
                                         EmbeddingCache& cache, const EmttOptions& opt = {}) {
  detail::require_subject_columns(corpus);
  std::vector<ColumnRef> refs;
  for (const auto& t : corpus.tables) refs.push_back({t.id, *t.subject_col});
  SerializationSpec spec = opt.serialization;
  spec.include_header = true;
  const auto emb = embed_columns(refs, corpus, provider, cache, spec);
  std::vector<EmbeddingVector> vecs;
  for (const auto& r : refs) vecs.push_back(emb.at(r));

  TopLevelResult res;
  res.clustering = cluster_items(euclidean_matrix(vecs), opt.linkage, opt.k_cap);
  const auto members = cluster_members(res.clustering.clustering);
  for (std::size_t c = 0; c < members.size(); ++c) {
    TopLevelType tlt;
    tlt.id = "tlt" + std::to_string(c);
    for (auto i : members[c]) tlt.member_tables.push_back(corpus.tables[i].id);
    std::sort(tlt.member_tables.begin(), tlt.member_tables.end());
    res.types.push_back(std::move(tlt));
  }
  return res;
}

// Clusters every column of the member tables; each cluster is one conceptual
// attribute and every column maps to exactly one of them. Fills tlt.attributes.
inline std::vector<ConceptualAttribute> identify_attributes(TopLevelType& tlt, const Corpus& corpus,
                                                            EmbeddingProvider& provider,
                                                            EmbeddingCache& cache,
                                                            const EmttOptions& opt = {}) {
  if (tlt.member_tables.empty()) throw InvalidArgument("top-level type '" + tlt.id + "' has no tables");
  std::vector<ColumnRef> refs;
  for (const auto& id : tlt.member_tables) {
    const Table& t = corpus.at(id);
    for (std::size_t c = 0; c < t.column_count(); ++c) refs.push_back({id, c});
  }
  std::vector<ConceptualAttribute> out;
  tlt.attributes.clear();
  if (refs.empty()) return out;
  const auto emb = embed_columns(refs, corpus, provider, cache, opt.serialization);
  std::vector<EmbeddingVector> vecs;
  for (const auto& r : refs) vecs.push_back(emb.at(r));
  const auto ic = cluster_items(euclidean_matrix(vecs), opt.linkage, opt.k_cap);
  const auto members = cluster_members(ic.clustering);
  for (std::size_t c = 0; c < members.size(); ++c) {
    ConceptualAttribute attr;
    attr.id = tlt.id + ".attr" + std::to_string(c);
    for (auto i : members[c]) attr.member_columns.push_back(refs[i]);
    tlt.attributes.push_back(attr.id);
    out.push_back(std::move(attr));
  }
  return out;
}

using AttributeMap = std::map<ColumnRef, std::string>;

inline AttributeMap attribute_map(const std::vector<ConceptualAttribute>& attrs) {
  AttributeMap m;
  for (const auto& a : attrs) {
    for (const auto& c : a.member_columns) m[c] = a.id;
  }
  return m;
}

// 1 - |S1 ∩ S2| / |S1 ∪ S2|; two empty sets are at distance 0.
inline double jaccard_distance(const std::set<std::string>& s1, const std::set<std::string>& s2) {
  if (s1.empty() && s2.empty()) return 0.0;
  std::size_t inter = 0;
  for (const auto& x : s1) inter += s2.count(x);
  const std::size_t uni = s1.size() + s2.size() - inter;
  return 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
}

inline std::set<std::string> attribute_set(const Table& t, const AttributeMap& attr_map) {
  std::set<std::string> s;
  for (std::size_t c = 0; c < t.column_count(); ++c) {
    auto it = attr_map.find({t.id, c});
    if (it == attr_map.end()) {
      throw InvalidArgument("column " + std::to_string(c) + " of '" + t.id + "' has no attribute");
    }
    s.insert(it->second);
  }
  return s;
}

inline double table_attribute_distance(const Table& t1, const Table& t2, const AttributeMap& attr_map) {
  return jaccard_distance(attribute_set(t1, attr_map), attribute_set(t2, attr_map));
}

inline DistanceMatrix jaccard_matrix(const std::vector<std::set<std::string>>& sets) {
  DistanceMatrix dm(sets.size());
  for (std::size_t i = 0; i < sets.size(); ++i) {
    for (std::size_t j = i + 1; j < sets.size(); ++j) dm.set(i, j, jaccard_distance(sets[i], sets[j]));
  }
  return dm;
}

// ---------------------------------------------------------------------------
// Dendrogram pruning

struct Subtype {
  std::vector<std::size_t> members;  // sorted item indices
  std::optional<std::size_t> parent;  // index into Fragment::subtypes
  double height = 0.0;                // cut level at emission
  double silhouette = 0.0;            // silhouette of that cut
  std::vector<std::size_t> direct;    // members not claimed by emitted descendants
};

struct Fragment {
  std::optional<double> max_silhouette;  // empty: no cut with 2 <= k <= n-1
  std::vector<Subtype> subtypes;          // emission order
};

// Walks the distinct cut levels from the top down. A level whose silhouette
// exceeds maxSilhouette - delta emits each not-yet-emitted cluster of at
// least min_cluster_size items, parented to the smallest emitted strict
// superset. maxSilhouette is the best silhouette over all levels with
// 2 <= k <= n-1.
inline Fragment prune_dendrogram(const Dendrogram& den, const DistanceMatrix& dm, const PruningParams& params) {
  if (params.delta < 0.0 || params.delta > 2.0) throw InvalidArgument("delta must lie in [0, 2]");
  if (params.min_cluster_size < 2) throw InvalidArgument("min_cluster_size must be >= 2");
  const std::size_t n = den.leaf_count;
  if (n < 2 || dm.size() != n) throw InvalidArgument("pruning needs a dendrogram over >= 2 items");

  struct Scored {
    CutLevel level;
    double silhouette;
    bool valid;
  };
  std::vector<Scored> levels;
  Fragment frag;
  for (auto& lv : cut_levels(den)) {
    const bool valid = lv.clustering.k >= 2 && lv.clustering.k + 1 <= n;
    const double s = valid ? silhouette(dm, lv.clustering) : kSilhouetteUndefined;
    if (valid && (!frag.max_silhouette || s > *frag.max_silhouette)) frag.max_silhouette = s;
    levels.push_back({std::move(lv), s, valid});
  }
  if (!frag.max_silhouette) return frag;
  const double floor = *frag.max_silhouette - params.delta;

  std::set<std::vector<std::size_t>> emitted;
  for (const auto& sc : levels) {
    if (!sc.valid || !(sc.silhouette > floor)) continue;
    for (auto& cluster : cluster_members(sc.level.clustering)) {
      if (cluster.size() < params.min_cluster_size) continue;
      if (emitted.count(cluster)) continue;
      Subtype st;
      st.height = sc.level.height;
      st.silhouette = sc.silhouette;
      // Earlier emissions are coarser, so strict supersets form a chain.
      for (std::size_t p = 0; p < frag.subtypes.size(); ++p) {
        const auto& cand = frag.subtypes[p].members;
        if (cand.size() <= cluster.size()) continue;
        if (!std::includes(cand.begin(), cand.end(), cluster.begin(), cluster.end())) continue;
        if (!st.parent || cand.size() < frag.subtypes[*st.parent].members.size()) st.parent = p;
      }
      emitted.insert(cluster);
      st.members = std::move(cluster);
      frag.subtypes.push_back(std::move(st));
    }
  }
  // Each item is assigned directly to the smallest emitted cluster holding it.
  for (std::size_t item = 0; item < n; ++item) {
    std::optional<std::size_t> best;
    for (std::size_t s = 0; s < frag.subtypes.size(); ++s) {
      const auto& m = frag.subtypes[s].members;
      if (!std::binary_search(m.begin(), m.end(), item)) continue;
      if (!best || m.size() < frag.subtypes[*best].members.size()) best = s;
    }
    if (best) frag.subtypes[*best].direct.push_back(item);
  }
  return frag;
}

// ---------------------------------------------------------------------------
// Pipeline

struct EmttResult {
  Taxonomy taxonomy;
  TopLevelResult top_level;
  std::map<std::string, std::vector<ConceptualAttribute>> attributes;  // by top-level id
  std::map<std::string, Fragment> fragments;                           // by top-level id
};

inline EmttResult run_emtt(const Corpus& corpus, EmbeddingProvider& provider, EmbeddingCache& cache,
                           const EmttOptions& opt = {}) {
  EmttResult res;
  res.top_level = identify_top_level(corpus, provider, cache, opt);
  for (auto& tlt : res.top_level.types) {
    auto attrs = identify_attributes(tlt, corpus, provider, cache, opt);
    const AttributeMap amap = attribute_map(attrs);
    res.attributes[tlt.id] = std::move(attrs);

    EntityType root{tlt.id, tlt.id, {}, false};
    std::set<std::string> claimed;
    Fragment frag;
    if (tlt.member_tables.size() >= 2) {
      std::vector<std::set<std::string>> sets;
      for (const auto& id : tlt.member_tables) sets.push_back(attribute_set(corpus.at(id), amap));
      const DistanceMatrix dm = jaccard_matrix(sets);
      frag = prune_dendrogram(agglomerate(dm, opt.linkage), dm, opt.pruning);
    }
    std::vector<std::string> sub_ids;
    std::vector<EntityType> subs;
    for (std::size_t s = 0; s < frag.subtypes.size(); ++s) {
      const auto& st = frag.subtypes[s];
      EntityType et;
      et.id = tlt.id + ".sub" + std::to_string(s);
      et.name = et.id;
      for (auto i : st.direct) et.tables.insert(tlt.member_tables[i]);
      for (auto i : st.members) claimed.insert(tlt.member_tables[i]);
      sub_ids.push_back(et.id);
      subs.push_back(std::move(et));
    }
    for (const auto& id : tlt.member_tables) {
      if (!claimed.count(id)) root.tables.insert(id);
    }
    res.taxonomy.add_type(std::move(root));
    for (auto& et : subs) res.taxonomy.add_type(std::move(et));
    for (std::size_t s = 0; s < frag.subtypes.size(); ++s) {
      const auto& parent = frag.subtypes[s].parent;
      res.taxonomy.add_edge(parent ? sub_ids[*parent] : tlt.id, sub_ids[s]);
    }
    res.fragments[tlt.id] = std::move(frag);
  }
  return res;
}

// Intermediate artifacts.

inline nlohmann::json toplevel_json(const EmttResult& res, const Corpus& corpus) {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& t : res.top_level.types) {
    nlohmann::json subj = nlohmann::json::object();
    for (const auto& id : t.member_tables) {
      const Table& tb = corpus.at(id);
      subj[id] = tb.subject_col ? nlohmann::json(tb.headers[*tb.subject_col]) : nlohmann::json(nullptr);
    }
    types.push_back({{"id", t.id}, {"tables", t.member_tables}, {"subject_columns", subj}});
  }
  const auto& c = res.top_level.clustering;
  return {{"k", c.clustering.k},
          {"silhouette", c.selected ? nlohmann::json(c.silhouette) : nlohmann::json(nullptr)},
          {"top_level_types", std::move(types)}};
}

inline nlohmann::json attributes_json(const EmttResult& res, const Corpus& corpus) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [tlt, attrs] : res.attributes) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& a : attrs) {
      nlohmann::json cols = nlohmann::json::array();
      for (const auto& c : a.member_columns) {
        cols.push_back({{"table", c.table_id}, {"col", c.col}, {"header", corpus.at(c.table_id).headers[c.col]}});
      }
      arr.push_back({{"id", a.id}, {"columns", std::move(cols)}});
    }
    out[tlt] = std::move(arr);
  }
  return out;
}

}  // namespace taxoforge
