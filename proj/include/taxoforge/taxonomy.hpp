#pragma once

#include <algorithm>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "taxoforge/error.hpp"

namespace taxoforge {

struct EntityType {
  std::string id;
  std::string name;
  std::set<std::string> tables;  // directly assigned table ids
  bool synthetic = false;        // e.g. a generated universal root

  friend bool operator==(const EntityType&, const EntityType&) = default;
};

struct TaxonomyStats {
  std::size_t type_count = 0;
  std::size_t depth = 0;

  friend bool operator==(const TaxonomyStats&, const TaxonomyStats&) = default;
};

// Rooted DAG of entity types with is-a edges parent -> child.
class Taxonomy {
 public:
  using Id = std::string;

  void add_type(EntityType t) {
    if (t.id.empty()) throw InvalidArgument("type id must be non-empty");
    if (t.name.empty()) throw InvalidArgument("type '" + t.id + "' needs a non-empty name");
    if (types_.count(t.id)) throw DuplicateType(t.id);
    children_[t.id];
    parents_[t.id];
    Id id = t.id;
    types_.emplace(std::move(id), std::move(t));
  }

  bool contains(const Id& id) const { return types_.count(id) != 0; }

  const EntityType& type(const Id& id) const {
    auto it = types_.find(id);
    if (it == types_.end()) throw UnknownType(id);
    return it->second;
  }
  EntityType& type(const Id& id) {
    auto it = types_.find(id);
    if (it == types_.end()) throw UnknownType(id);
    return it->second;
  }

  // Adds parent -> child. Duplicate edges are no-ops; cycles are rejected.
  Taxonomy& add_edge(const Id& parent, const Id& child) {
    require(parent);
    require(child);
    if (edges_.count({parent, child})) return *this;
    if (parent == child || reaches(child, parent)) throw CycleError(parent, child);
    edges_.insert({parent, child});
    children_[parent].insert(child);
    parents_[child].insert(parent);
    return *this;
  }

  const std::map<Id, EntityType>& types() const noexcept { return types_; }
  const std::set<std::pair<Id, Id>>& edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return types_.size(); }
  bool empty() const noexcept { return types_.empty(); }

  const std::set<Id>& children(const Id& id) const { return require(id), children_.at(id); }
  const std::set<Id>& parents(const Id& id) const { return require(id), parents_.at(id); }

  std::vector<Id> roots() const {
    std::vector<Id> out;
    for (const auto& [id, ps] : parents_) {
      if (ps.empty()) out.push_back(id);
    }
    return out;
  }

  // Ids with a directed path to `id`, excluding `id`.
  std::set<Id> ancestors(const Id& id) const { return closure(id, parents_); }
  std::set<Id> descendants(const Id& id) const { return closure(id, children_); }

  // Tables of `id` and all of its descendants.
  std::set<std::string> associated_tables(const Id& id) const {
    std::set<std::string> out = type(id).tables;
    for (const auto& d : descendants(id)) {
      const auto& ts = types_.at(d).tables;
      out.insert(ts.begin(), ts.end());
    }
    return out;
  }

  // Kahn's algorithm; ties by id.
  std::vector<Id> topological_order() const {
    std::map<Id, std::size_t> indeg;
    for (const auto& [id, ps] : parents_) indeg[id] = ps.size();
    std::set<Id> ready;
    for (const auto& [id, deg] : indeg) {
      if (deg == 0) ready.insert(id);
    }
    std::vector<Id> out;
    while (!ready.empty()) {
      Id cur = *ready.begin();
      ready.erase(ready.begin());
      out.push_back(cur);
      for (const auto& c : children_.at(cur)) {
        if (--indeg[c] == 0) ready.insert(c);
      }
    }
    return out;
  }

  // Longest chain of non-synthetic types ending at `id`, counted in levels.
  std::size_t level(const Id& id) const {
    std::map<Id, std::size_t> memo;
    return level_impl(id, memo);
  }

  // T# excludes synthetic types; L# is the longest root-to-leaf chain of
  // non-synthetic types.
  TaxonomyStats stats() const {
    TaxonomyStats s;
    std::map<Id, std::size_t> memo;
    for (const auto& [id, t] : types_) {
      if (!t.synthetic) ++s.type_count;
      if (children_.at(id).empty()) s.depth = std::max(s.depth, level_impl(id, memo));
    }
    return s;
  }

  friend bool operator==(const Taxonomy& a, const Taxonomy& b) {
    return a.types_ == b.types_ && a.edges_ == b.edges_;
  }

 private:
  void require(const Id& id) const {
    if (!types_.count(id)) throw UnknownType(id);
  }

  bool reaches(const Id& from, const Id& to) const {
    std::set<Id> seen;
    std::vector<Id> stack{from};
    while (!stack.empty()) {
      Id cur = std::move(stack.back());
      stack.pop_back();
      if (cur == to) return true;
      if (!seen.insert(cur).second) continue;
      for (const auto& c : children_.at(cur)) stack.push_back(c);
    }
    return false;
  }

  std::set<Id> closure(const Id& id, const std::map<Id, std::set<Id>>& adj) const {
    require(id);
    std::set<Id> out;
    std::vector<Id> stack(adj.at(id).begin(), adj.at(id).end());
    while (!stack.empty()) {
      Id cur = std::move(stack.back());
      stack.pop_back();
      if (!out.insert(cur).second) continue;
      for (const auto& n : adj.at(cur)) stack.push_back(n);
    }
    return out;
  }

  std::size_t level_impl(const Id& id, std::map<Id, std::size_t>& memo) const {
    if (auto it = memo.find(id); it != memo.end()) return it->second;
    std::size_t best = 0;
    for (const auto& p : parents_.at(id)) best = std::max(best, level_impl(p, memo));
    const std::size_t v = best + (types_.at(id).synthetic ? 0 : 1);
    memo.emplace(id, v);
    return v;
  }

  std::map<Id, EntityType> types_;
  std::set<std::pair<Id, Id>> edges_;
  std::map<Id, std::set<Id>> children_;
  std::map<Id, std::set<Id>> parents_;
};

// ---------------------------------------------------------------------------
// JSON: {"types": [{"id", "name", "tables", "synthetic"}], "edges": [[p, c]]}
// Types sorted by id, tables and edges sorted, object keys sorted.

inline nlohmann::json to_json(const Taxonomy& tax) {
  nlohmann::json types = nlohmann::json::array();
  for (const auto& [id, t] : tax.types()) {
    types.push_back({{"id", t.id},
                     {"name", t.name},
                     {"tables", std::vector<std::string>(t.tables.begin(), t.tables.end())},
                     {"synthetic", t.synthetic}});
  }
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [p, c] : tax.edges()) edges.push_back({p, c});
  return {{"types", std::move(types)}, {"edges", std::move(edges)}};
}

inline std::string dump_taxonomy(const Taxonomy& tax) { return to_json(tax).dump(2) + "\n"; }

inline Taxonomy taxonomy_from_json(const nlohmann::json& j) {
  Taxonomy tax;
  try {
    for (const auto& t : j.at("types")) {
      EntityType et;
      et.id = t.at("id").get<std::string>();
      et.name = t.contains("name") ? t.at("name").get<std::string>() : et.id;
      if (t.contains("tables")) {
        for (const auto& tb : t.at("tables")) et.tables.insert(tb.get<std::string>());
      }
      et.synthetic = t.value("synthetic", false);
      tax.add_type(std::move(et));
    }
    if (j.contains("edges")) {
      for (const auto& e : j.at("edges")) {
        if (!e.is_array() || e.size() != 2) throw ParseError("edge must be a [parent, child] pair");
        tax.add_edge(e[0].get<std::string>(), e[1].get<std::string>());
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("invalid taxonomy JSON: ") + e.what());
  }
  return tax;
}

inline Taxonomy load_taxonomy(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot read " + file.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
  return taxonomy_from_json(j);
}

inline void write_text_file(const std::filesystem::path& file, const std::string& content) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + file.string());
  out << content;
  if (!out) throw IoError("cannot write " + file.string());
}

}  // namespace taxoforge
