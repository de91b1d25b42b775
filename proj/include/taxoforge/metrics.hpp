#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taxoforge/error.hpp"
#include "taxoforge/taxonomy.hpp"
#include "taxoforge/text.hpp"

namespace taxoforge {

// ---------------------------------------------------------------------------
// Ground truth

struct GtAnnotation {
  std::string top_level;
  std::vector<std::string> path;  // type names, top level first

  friend bool operator==(const GtAnnotation&, const GtAnnotation&) = default;
};

struct GroundTruth {
  Taxonomy taxonomy;
  std::map<std::string, GtAnnotation> per_table;

  // Type id for a GT type name; names are unique within a GT taxonomy.
  const std::string& id_of(const std::string& name) const {
    auto it = by_name_.find(name);
    if (it == by_name_.end()) throw UnknownType(name);
    return it->second;
  }

  // Validates the annotations and attaches each table to the last type of
  // its path.
  static GroundTruth make(Taxonomy tax, std::map<std::string, GtAnnotation> per_table) {
    GroundTruth gt;
    for (const auto& [id, t] : tax.types()) {
      if (!gt.by_name_.emplace(t.name, id).second) {
        throw ParseError("ground-truth type name '" + t.name + "' is not unique");
      }
    }
    for (const auto& [table, ann] : per_table) {
      if (ann.path.empty()) throw ParseError("table '" + table + "' has an empty annotation path");
      if (ann.path.front() != ann.top_level) {
        throw ParseError("table '" + table + "': path must start with its top-level type");
      }
      std::vector<std::string> ids;
      for (const auto& name : ann.path) {
        if (!gt.by_name_.count(name)) throw ParseError("table '" + table + "': unknown type '" + name + "'");
        ids.push_back(gt.by_name_.at(name));
      }
      for (const auto& p : tax.parents(ids.front())) {
        if (!tax.type(p).synthetic) {
          throw ParseError("table '" + table + "': '" + ann.top_level + "' is not a top-level type");
        }
      }
      for (std::size_t i = 1; i < ids.size(); ++i) {
        if (!tax.children(ids[i - 1]).count(ids[i])) {
          throw ParseError("table '" + table + "': no edge " + ann.path[i - 1] + " -> " + ann.path[i]);
        }
      }
      tax.type(ids.back()).tables.insert(table);
    }
    gt.taxonomy = std::move(tax);
    gt.per_table = std::move(per_table);
    return gt;
  }

 private:
  std::map<std::string, std::string> by_name_;
};

// Non-synthetic types without non-synthetic ancestors.
inline std::vector<std::string> top_level_types(const Taxonomy& tax) {
  std::vector<std::string> out;
  for (const auto& [id, t] : tax.types()) {
    if (t.synthetic) continue;
    const auto anc = tax.ancestors(id);
    if (std::none_of(anc.begin(), anc.end(), [&](const auto& a) { return !tax.type(a).synthetic; })) {
      out.push_back(id);
    }
  }
  return out;
}

// Derives annotations from the tables already attached to a taxonomy; a
// table's path follows the lexicographically smallest chain of names.
inline GroundTruth ground_truth_from_taxonomy(const Taxonomy& tax) {
  std::map<std::string, GtAnnotation> per_table;
  std::map<std::string, std::vector<std::string>> memo;
  auto path_to = [&](auto&& self, const std::string& id) -> std::vector<std::string> {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    std::optional<std::vector<std::string>> best;
    for (const auto& p : tax.parents(id)) {
      if (tax.type(p).synthetic) continue;
      auto cand = self(self, p);
      if (!best || cand < *best) best = std::move(cand);
    }
    std::vector<std::string> out = best.value_or(std::vector<std::string>{});
    out.push_back(tax.type(id).name);
    memo.emplace(id, out);
    return out;
  };
  Taxonomy bare = tax;
  for (const auto& [id, t] : tax.types()) {
    if (t.synthetic) continue;
    for (const auto& table : t.tables) {
      auto path = path_to(path_to, id);
      if (per_table.count(table)) {
        throw ParseError("table '" + table + "' is attached to more than one type");
      }
      per_table[table] = {path.front(), std::move(path)};
    }
    bare.type(id).tables.clear();
  }
  return GroundTruth::make(std::move(bare), std::move(per_table));
}

// Annotations CSV: table_id,top_level,path with path "A>B>C". A first row
// reading table_id,... is treated as a header.
inline std::map<std::string, GtAnnotation> parse_annotations(std::string_view csv) {
  std::map<std::string, GtAnnotation> out;
  const auto rows = text::parse_csv(csv);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() == 1 && text::trim(row[0]).empty()) continue;
    if (r == 0 && !row.empty() && text::trim(row[0]) == "table_id") continue;
    if (row.size() != 3) throw ParseError("annotation row " + std::to_string(r + 1) + " needs 3 fields");
    GtAnnotation ann;
    ann.top_level = text::trim(row[1]);
    std::string_view path = row[2];
    std::size_t start = 0;
    while (true) {
      const auto sep = path.find('>', start);
      ann.path.push_back(text::trim(path.substr(start, sep == std::string_view::npos ? std::string_view::npos : sep - start)));
      if (ann.path.back().empty()) throw ParseError("annotation row " + std::to_string(r + 1) + " has an empty path step");
      if (sep == std::string_view::npos) break;
      start = sep + 1;
    }
    const std::string id = text::trim(row[0]);
    if (id.empty()) throw ParseError("annotation row " + std::to_string(r + 1) + " has no table id");
    if (!out.emplace(id, std::move(ann)).second) throw ParseError("table '" + id + "' is annotated twice");
  }
  return out;
}

inline std::string read_text_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot read " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Without an annotations file the tables attached to the taxonomy are used.
inline GroundTruth load_ground_truth(const std::filesystem::path& taxonomy_file,
                                     const std::optional<std::filesystem::path>& annotations_file = std::nullopt) {
  Taxonomy tax = load_taxonomy(taxonomy_file);
  if (!annotations_file) return ground_truth_from_taxonomy(tax);
  return GroundTruth::make(std::move(tax), parse_annotations(read_text_file(*annotations_file)));
}

// ---------------------------------------------------------------------------
// Rand Index

struct ConfusionCounts {
  std::uint64_t tp = 0, tn = 0, fp = 0, fn = 0;

  std::uint64_t total() const noexcept { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct RandIndexResult {
  double value = 0.0;
  ConfusionCounts counts;
  std::vector<std::string> evaluated;
  std::vector<std::string> excluded;  // present on one side only
};

// Pair counts from the contingency table of the two labelings, restricted
// to tables present on both sides.
inline RandIndexResult rand_index_detail(const std::map<std::string, std::string>& out_assign,
                                         const std::map<std::string, std::string>& gt_assign) {
  RandIndexResult res;
  std::map<std::pair<std::string, std::string>, std::uint64_t> cell;
  std::map<std::string, std::uint64_t> rows, cols;
  for (const auto& [table, label] : out_assign) {
    auto it = gt_assign.find(table);
    if (it == gt_assign.end()) {
      res.excluded.push_back(table);
      continue;
    }
    res.evaluated.push_back(table);
    ++cell[{label, it->second}];
    ++rows[label];
    ++cols[it->second];
  }
  for (const auto& [table, label] : gt_assign) {
    if (!out_assign.count(table)) res.excluded.push_back(table);
  }
  std::sort(res.excluded.begin(), res.excluded.end());
  const std::uint64_t n = res.evaluated.size();
  if (n < 2) throw InsufficientTables();
  auto pairs = [](std::uint64_t k) { return k * (k - (k > 0 ? 1 : 0)) / 2; };
  std::uint64_t same_both = 0, same_out = 0, same_gt = 0;
  for (const auto& [k, c] : cell) same_both += pairs(c);
  for (const auto& [k, c] : rows) same_out += pairs(c);
  for (const auto& [k, c] : cols) same_gt += pairs(c);
  res.counts.tp = same_both;
  res.counts.fp = same_out - same_both;
  res.counts.fn = same_gt - same_both;
  res.counts.tn = pairs(n) - res.counts.tp - res.counts.fp - res.counts.fn;
  res.value = static_cast<double>(res.counts.tp + res.counts.tn) / static_cast<double>(pairs(n));
  return res;
}

inline std::map<std::string, std::string> gt_top_level_assignment(const GroundTruth& gt) {
  std::map<std::string, std::string> out;
  for (const auto& [table, ann] : gt.per_table) out[table] = ann.top_level;
  return out;
}

inline double rand_index(const std::map<std::string, std::string>& out_assign, const GroundTruth& gt) {
  return rand_index_detail(out_assign, gt_top_level_assignment(gt)).value;
}

// Each table goes to the top-level type containing it with the most
// associated tables; ties by id.
inline std::map<std::string, std::string> top_level_assignment(const Taxonomy& tax) {
  std::map<std::string, std::string> out;
  std::map<std::string, std::size_t> size_of;
  for (const auto& top : top_level_types(tax)) {
    const auto tables = tax.associated_tables(top);
    for (const auto& t : tables) {
      auto it = out.find(t);
      if (it == out.end() || tables.size() > size_of[it->second]) out[t] = top;
    }
    size_of[top] = tables.size();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Purity

struct PurityResult {
  double value = 0.0;
  std::vector<double> per_cluster;  // aligned with the evaluated clusters
  std::size_t skipped = 0;          // clusters without GT tables
};

// Per cluster: share of its GT-annotated tables whose GT top level is the
// cluster's most frequent one (ties by name); unweighted mean over clusters.
inline PurityResult purity_detail(const std::vector<std::set<std::string>>& clusters, const GroundTruth& gt) {
  PurityResult res;
  double sum = 0.0;
  for (const auto& cluster : clusters) {
    std::map<std::string, std::size_t> counts;
    std::size_t n = 0;
    for (const auto& t : cluster) {
      auto it = gt.per_table.find(t);
      if (it == gt.per_table.end()) continue;
      ++counts[it->second.top_level];
      ++n;
    }
    if (n == 0) {
      ++res.skipped;
      continue;
    }
    std::size_t best = 0;
    for (const auto& [name, c] : counts) best = std::max(best, c);
    const double p = static_cast<double>(best) / static_cast<double>(n);
    res.per_cluster.push_back(p);
    sum += p;
  }
  if (res.per_cluster.empty()) throw NoTypes();
  res.value = sum / static_cast<double>(res.per_cluster.size());
  return res;
}

inline double purity(const std::vector<std::set<std::string>>& clusters, const GroundTruth& gt) {
  return purity_detail(clusters, gt).value;
}

inline std::vector<std::set<std::string>> top_level_clusters(const Taxonomy& tax) {
  std::vector<std::set<std::string>> out;
  for (const auto& top : top_level_types(tax)) out.push_back(tax.associated_tables(top));
  return out;
}

// ---------------------------------------------------------------------------
// Type matching and Tree Consistency Score

struct Matching {
  std::map<std::string, std::optional<std::string>> m;  // output id -> GT id

  const std::optional<std::string>& of(const std::string& id) const {
    static const std::optional<std::string> none;
    auto it = m.find(id);
    return it == m.end() ? none : it->second;
  }
};

// Each associated table votes for every GT type on its annotated path; the
// type with the most votes wins, ties going to the deeper GT type and then
// to the smaller name.
inline Matching match_types(const Taxonomy& out, const GroundTruth& gt) {
  Matching res;
  std::map<std::string, std::size_t> gt_level;
  for (const auto& [id, t] : gt.taxonomy.types()) gt_level[id] = gt.taxonomy.level(id);
  for (const auto& [id, t] : out.types()) {
    std::map<std::string, std::size_t> votes;
    for (const auto& table : out.associated_tables(id)) {
      auto it = gt.per_table.find(table);
      if (it == gt.per_table.end()) continue;
      for (const auto& name : it->second.path) ++votes[gt.id_of(name)];
    }
    std::optional<std::string> best;
    for (const auto& [g, c] : votes) {
      if (!best) {
        best = g;
        continue;
      }
      const std::size_t bc = votes[*best];
      const auto& bn = gt.taxonomy.type(*best).name;
      const auto& gn = gt.taxonomy.type(g).name;
      if (c > bc || (c == bc && (gt_level[g] > gt_level[*best] || (gt_level[g] == gt_level[*best] && gn < bn)))) {
        best = g;
      }
    }
    res.m[id] = best;
  }
  return res;
}

struct TcsResult {
  double value = 0.0;
  std::map<std::string, double> c_type;  // matched non-synthetic output types
  std::vector<std::string> excluded;     // synthetic or unmatched output types
};

// C_type(t) = |{a in A(t) : a matched, m(a) in A(m(t))}| / |A(t)|, or 1 when
// t has no ancestors; synthetic types are left out of A on both sides.
inline TcsResult tcs_detail(const Taxonomy& out, const GroundTruth& gt, const Matching& matching) {
  auto real_ancestors = [](const Taxonomy& tax, const std::string& id) {
    std::set<std::string> a;
    for (const auto& x : tax.ancestors(id)) {
      if (!tax.type(x).synthetic) a.insert(x);
    }
    return a;
  };
  TcsResult res;
  double sum = 0.0;
  for (const auto& [id, t] : out.types()) {
    const auto& mt = matching.of(id);
    if (t.synthetic || !mt) {
      res.excluded.push_back(id);
      continue;
    }
    const auto anc = real_ancestors(out, id);
    double c = 1.0;
    if (!anc.empty()) {
      const auto gt_anc = real_ancestors(gt.taxonomy, *mt);
      std::size_t good = 0;
      for (const auto& a : anc) {
        const auto& ma = matching.of(a);
        if (ma && gt_anc.count(*ma)) ++good;
      }
      c = static_cast<double>(good) / static_cast<double>(anc.size());
    }
    res.c_type[id] = c;
    sum += c;
  }
  if (res.c_type.empty()) throw NoMatchedTypes();
  res.value = sum / static_cast<double>(res.c_type.size());
  return res;
}

inline double tcs(const Taxonomy& out, const GroundTruth& gt, const Matching& matching) {
  return tcs_detail(out, gt, matching).value;
}

inline double tcs(const Taxonomy& out, const GroundTruth& gt) { return tcs(out, gt, match_types(out, gt)); }

// ---------------------------------------------------------------------------
// Report

inline nlohmann::json report(const Taxonomy& out, const GroundTruth& gt) {
  nlohmann::json j;
  const auto os = out.stats();
  const auto gs = gt.taxonomy.stats();
  j["type_count"] = os.type_count;
  j["depth"] = os.depth;
  j["ground_truth"] = {{"type_count", gs.type_count}, {"depth", gs.depth}, {"tables", gt.per_table.size()}};

  try {
    const auto ri = rand_index_detail(top_level_assignment(out), gt_top_level_assignment(gt));
    j["rand_index"] = ri.value;
    j["confusion"] = {{"tp", ri.counts.tp}, {"tn", ri.counts.tn}, {"fp", ri.counts.fp}, {"fn", ri.counts.fn}};
    j["evaluated_tables"] = ri.evaluated.size();
    j["excluded_tables"] = ri.excluded;
  } catch (const InsufficientTables&) {
    j["rand_index"] = nullptr;
    j["confusion"] = nullptr;
    j["evaluated_tables"] = 0;
    j["excluded_tables"] = nlohmann::json::array();
  }

  try {
    j["purity"] = purity(top_level_clusters(out), gt);
  } catch (const NoTypes&) {
    j["purity"] = nullptr;
  }

  const Matching matching = match_types(out, gt);
  nlohmann::json mj = nlohmann::json::object();
  for (const auto& [id, g] : matching.m) {
    mj[id] = g ? nlohmann::json(gt.taxonomy.type(*g).name) : nlohmann::json(nullptr);
  }
  j["matching"] = std::move(mj);
  try {
    const auto t = tcs_detail(out, gt, matching);
    j["tcs"] = t.value;
    j["c_type"] = t.c_type;
    j["excluded_types"] = t.excluded;
  } catch (const NoMatchedTypes&) {
    j["tcs"] = nullptr;
    j["c_type"] = nlohmann::json::object();
    std::vector<std::string> all;
    for (const auto& [id, t] : out.types()) all.push_back(id);
    j["excluded_types"] = all;
  }
  return j;
}

inline std::string dump_report(const nlohmann::json& r) { return r.dump(2) + "\n"; }

}  // namespace taxoforge
