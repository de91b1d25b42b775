#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "taxoforge/corpus.hpp"
#include "taxoforge/embedding.hpp"
#include "taxoforge/error.hpp"
#include "taxoforge/llm.hpp"
#include "taxoforge/prompts.hpp"
#include "taxoforge/rng.hpp"
#include "taxoforge/taxonomy.hpp"
#include "taxoforge/text.hpp"

namespace taxoforge {

inline constexpr std::size_t kPromptSampleRows = 5;
inline constexpr std::size_t kPromptCellTokens = 50;

// ---------------------------------------------------------------------------
// Table entity type generation

// Header line plus up to five sampled rows; cells truncated to 50 tokens and
// written as comma-separated values (quoted only when needed).
inline std::string serialize_table_for_prompt(const Table& t, std::uint64_t seed) {
  std::vector<std::string> header;
  for (const auto& h : t.headers) header.push_back(truncate_cell(h, kPromptCellTokens));
  std::string out = text::csv_line(header);
  for (const auto& row : sample_rows(t, kPromptSampleRows, seed)) {
    std::vector<std::string> cells;
    cells.reserve(row.size());
    for (const auto& c : row) cells.push_back(truncate_cell(c, kPromptCellTokens));
    out += '\n';
    out += text::csv_line(cells);
  }
  return out;
}

struct Prompt {
  std::string system;
  std::string user;
};

inline Prompt build_generation_prompt(const Table& t, std::uint64_t seed) {
  return {std::string(prompts::kGenerationSystem),
          prompts::render(prompts::kGenerationUser, {{"table", serialize_table_for_prompt(t, seed)}})};
}

// One request, parsed as a name list; an unparseable answer gets one repair
// request before the table is given up.
inline std::vector<std::string> generate_types(const Table& t, LlmClient& client, std::uint64_t seed) {
  if (t.column_count() == 0) throw InvalidArgument("table '" + t.id + "' is empty");
  const Prompt p = build_generation_prompt(t, seed);
  const auto first = client.complete(p.system, p.user);
  try {
    return parse_name_list(first.text);
  } catch (const EmptyParse&) {
  }
  const std::string repair = prompts::render(
      prompts::kGenerationRepair,
      {{"previous", first.text}, {"table", serialize_table_for_prompt(t, seed)}});
  const auto second = client.complete(p.system, repair);
  try {
    return parse_name_list(second.text);
  } catch (const EmptyParse&) {
    throw GenerationFailed(t.id);
  }
}

// ---------------------------------------------------------------------------
// Flattening

struct TypeCandidateList {
  std::vector<std::string> names;                          // first-seen order
  std::map<std::string, std::set<std::string>> origin;     // name -> table ids

  bool empty() const noexcept { return names.empty(); }
  std::size_t size() const noexcept { return names.size(); }
};

inline std::string normalize_type_name(std::string_view name) { return text::collapse_whitespace(name); }
inline std::string type_key(std::string_view name) { return text::ascii_lower(normalize_type_name(name)); }

// Merges same-named types (case-insensitive, whitespace-normalized) across
// tables, keeping the first spelling. Tables are visited in id order.
inline TypeCandidateList flatten(const std::map<std::string, std::vector<std::string>>& per_table) {
  TypeCandidateList out;
  std::map<std::string, std::string> canonical;  // key -> first spelling
  for (const auto& [table, names] : per_table) {
    for (const auto& raw : names) {
      std::string name = normalize_type_name(raw);
      if (name.empty()) continue;
      auto [it, inserted] = canonical.emplace(type_key(name), name);
      if (inserted) out.names.push_back(name);
      out.origin[it->second].insert(table);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Edge ranking filter

struct EdgeScore {
  std::string parent;
  std::string child;
  double score = 0.0;
};

class EdgeScorer {
 public:
  virtual ~EdgeScorer() = default;
  // Plausibility in [0, 1] of one templated sentence about parent -> child.
  virtual double score(const std::string& sentence, const std::string& parent, const std::string& child) = 0;
};

class ConstantScorer final : public EdgeScorer {
 public:
  explicit ConstantScorer(double value) : value_(value) {}
  double score(const std::string&, const std::string&, const std::string&) override { return value_; }

 private:
  double value_;
};

// (cosine(child, parent) + 1) / 2 over name embeddings; the sentence itself
// does not enter, so every template scores the same.
class EmbeddingCosineScorer final : public EdgeScorer {
 public:
  EmbeddingCosineScorer(EmbeddingProvider& provider, EmbeddingCache& cache) : provider_(provider), cache_(cache) {}

  double score(const std::string&, const std::string& parent, const std::string& child) override {
    const std::vector<std::string> texts{child, parent};
    const auto v = embed_texts(texts, provider_, cache_);
    return std::clamp((cosine(v[0], v[1]) + 1.0) / 2.0, 0.0, 1.0);
  }

 private:
  EmbeddingProvider& provider_;
  EmbeddingCache& cache_;
};

// Asks the chat backend whether the sentence holds: yes -> 1, anything else -> 0.
class LlmYesNoScorer final : public EdgeScorer {
 public:
  explicit LlmYesNoScorer(LlmClient& client) : client_(client) {}

  double score(const std::string& sentence, const std::string&, const std::string&) override {
    const auto resp = client_.complete(std::string(prompts::kTaxonomySystem),
                                       prompts::render(prompts::kEdgeCheck, {{"sentence", sentence}}));
    std::string answer = text::ascii_lower(text::trim(resp.text));
    while (!answer.empty() && (answer.front() == '"' || answer.front() == '\'' || answer.front() == '*')) {
      answer.erase(answer.begin());
    }
    return answer.rfind("yes", 0) == 0 ? 1.0 : 0.0;
  }

 private:
  LlmClient& client_;
};

inline std::vector<std::string> edge_sentences(const std::string& parent, const std::string& child) {
  std::vector<std::string> out;
  for (auto tmpl : prompts::kEdgeTemplates) {
    out.push_back(prompts::render(tmpl, {{"parent", parent}, {"child", child}}));
  }
  return out;
}

// Mean template score per edge.
inline std::vector<EdgeScore> filter_edges(const std::vector<std::pair<std::string, std::string>>& edges,
                                           EdgeScorer& scorer) {
  std::vector<EdgeScore> out;
  out.reserve(edges.size());
  for (const auto& [parent, child] : edges) {
    const auto sentences = edge_sentences(parent, child);
    double sum = 0.0;
    for (const auto& s : sentences) sum += scorer.score(s, parent, child);
    out.push_back({parent, child, sum / static_cast<double>(sentences.size())});
  }
  return out;
}

struct EdgeFilter {
  EdgeScorer* scorer = nullptr;
  double threshold = 0.5;
};

// ---------------------------------------------------------------------------
// Chain-of-Layer construction

// Indented outline from `root`, two spaces per level, children by name.
inline std::string render_outline(const Taxonomy& tax, const std::string& root) {
  std::string out;
  auto walk = [&](auto&& self, const std::string& id, std::size_t depth) -> void {
    out += std::string(2 * depth, ' ') + tax.type(id).name + "\n";
    std::vector<std::string> kids(tax.children(id).begin(), tax.children(id).end());
    std::sort(kids.begin(), kids.end(),
              [&](const auto& a, const auto& b) { return tax.type(a).name < tax.type(b).name; });
    for (const auto& k : kids) self(self, k, depth + 1);
  };
  walk(walk, root, 0);
  if (!out.empty()) out.pop_back();
  return out;
}

namespace detail {

inline std::string clean_edge_side(std::string_view s) {
  std::string v = text::collapse_whitespace(s);
  while (strip_one_decoration(v)) {
  }
  return v;
}

}  // namespace detail

// Lines "Parent -> Child". Returns nullopt when the answer has neither an
// edge line nor the literal NONE.
inline std::optional<std::vector<std::pair<std::string, std::string>>> parse_edges(std::string_view response) {
  std::vector<std::pair<std::string, std::string>> edges;
  bool none = false;
  std::size_t start = 0;
  while (start <= response.size()) {
    auto end = response.find('\n', start);
    if (end == std::string_view::npos) end = response.size();
    std::string line = text::collapse_whitespace(response.substr(start, end - start));
    start = end + 1;
    if (line.empty()) continue;
    const auto arrow = line.find("->");
    if (arrow == std::string::npos) {
      while (detail::strip_one_decoration(line)) {
      }
      std::string bare = text::ascii_lower(line);
      while (!bare.empty() && (bare.back() == '.' || bare.back() == '!')) bare.pop_back();
      if (bare == "none") none = true;
      continue;
    }
    auto parent = detail::clean_edge_side(std::string_view(line).substr(0, arrow));
    auto child = detail::clean_edge_side(std::string_view(line).substr(arrow + 2));
    if (parent.empty() || child.empty()) continue;
    edges.emplace_back(std::move(parent), std::move(child));
  }
  if (edges.empty() && !none) return std::nullopt;
  return edges;
}

struct ColResult {
  Taxonomy taxonomy;
  std::string root;
  std::vector<std::vector<std::string>> layers;  // layers[0] = {root}
  std::vector<std::string> stragglers;
  std::vector<EdgeScore> scored;                 // every filtered edge
  std::vector<std::string> log;                  // discarded proposals, multi-parent placements
};

// Builds the taxonomy top-down. Iteration k prompts once per type of layer k
// with the format instruction, the demonstration, the current outline and
// the remaining candidates; proposed edges survive if the child is still a
// candidate, the parent is already placed, and the filter score reaches the
// threshold. Accepted children form layer k+1 and leave the candidate list.
// Whatever is left when the loop ends is attached under the root.
inline ColResult chain_of_layer(const TypeCandidateList& V, const std::string& root_name, LlmClient& client,
                                const EdgeFilter& filter, std::size_t max_iters = 10) {
  if (V.empty()) throw InvalidArgument("candidate list is empty");
  if (!filter.scorer) throw InvalidArgument("edge filter needs a scorer");
  const std::string root = normalize_type_name(root_name);
  if (root.empty()) throw InvalidArgument("root name must be non-empty");
  std::map<std::string, std::string> candidates;  // key -> name, remaining
  for (const auto& n : V.names) {
    if (type_key(n) == type_key(root)) throw InvalidArgument("root '" + root + "' is in the candidate list");
    candidates.emplace(type_key(n), n);
  }
  auto origin_of = [&](const std::string& name) {
    auto it = V.origin.find(name);
    return it == V.origin.end() ? std::set<std::string>{} : it->second;
  };

  ColResult res;
  res.root = root;
  res.taxonomy.add_type({root, root, {}, true});
  std::map<std::string, std::string> placed{{type_key(root), root}};
  res.layers.push_back({root});

  const std::string system(prompts::kTaxonomySystem);
  const std::string demonstration = client.complete(system, std::string(prompts::kDemonstration)).text;

  for (std::size_t k = 0; !candidates.empty() && k < max_iters; ++k) {
    std::vector<std::string> remaining;
    for (const auto& n : V.names) {
      if (candidates.count(type_key(n))) remaining.push_back(n);
    }
    const std::string outline = render_outline(res.taxonomy, root);
    std::string candidate_text = text::join(remaining, ", ");

    std::vector<std::pair<std::string, std::string>> proposals;
    std::set<std::pair<std::string, std::string>> proposed;
    for (const auto& parent : res.layers[k]) {
      const std::string prompt = prompts::render(prompts::kLayer, {{"demonstration", demonstration},
                                                                   {"outline", outline},
                                                                   {"parent", parent},
                                                                   {"candidates", candidate_text}});
      auto answer = client.complete(system, prompt);
      auto edges = parse_edges(answer.text);
      if (!edges) {
        answer = client.complete(system, prompts::render(prompts::kLayerRepair,
                                                          {{"previous", answer.text}, {"prompt", prompt}}));
        edges = parse_edges(answer.text);
        if (!edges) throw LayerParseError(k);
      }
      for (const auto& [p, c] : *edges) {
        auto pit = placed.find(type_key(p));
        auto cit = candidates.find(type_key(c));
        if (pit == placed.end() || cit == candidates.end()) {
          res.log.push_back("layer " + std::to_string(k) + ": discarded " + p + " -> " + c +
                            (pit == placed.end() ? " (parent not in taxonomy)" : " (child not a remaining candidate)"));
          continue;
        }
        std::pair<std::string, std::string> e{pit->second, cit->second};
        if (proposed.insert(e).second) proposals.push_back(std::move(e));
      }
    }

    std::vector<std::string> next;
    for (auto& s : filter_edges(proposals, *filter.scorer)) {
      res.scored.push_back(s);
      if (!(s.score >= filter.threshold)) {
        res.log.push_back("layer " + std::to_string(k) + ": filtered " + s.parent + " -> " + s.child);
        continue;
      }
      if (!res.taxonomy.contains(s.child)) {
        res.taxonomy.add_type({s.child, s.child, origin_of(s.child), false});
        next.push_back(s.child);
      } else {
        res.log.push_back("layer " + std::to_string(k) + ": " + s.child + " placed under several parents");
      }
      res.taxonomy.add_edge(s.parent, s.child);
    }
    if (next.empty()) break;
    std::sort(next.begin(), next.end());
    for (const auto& c : next) {
      candidates.erase(type_key(c));
      placed.emplace(type_key(c), c);
    }
    res.layers.push_back(std::move(next));
  }

  for (const auto& n : V.names) {
    if (!candidates.count(type_key(n))) continue;
    res.taxonomy.add_type({n, n, origin_of(n), false});
    res.taxonomy.add_edge(root, n);
    res.stragglers.push_back(n);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Pipeline

struct GettOptions {
  std::string root_name = "Thing";
  double edge_threshold = 0.5;
  std::size_t max_iters = 10;
  std::uint64_t seed = 0;
};

struct GettResult {
  Taxonomy taxonomy;
  std::map<std::string, std::vector<std::string>> per_table;  // successful tables
  std::vector<std::string> failed_tables;
  ColResult col;

  bool partial() const noexcept { return !failed_tables.empty(); }
};

// Per-table seeds derive from the run seed and the table id, so adding a
// table never changes another table's sample.
inline std::uint64_t table_seed(std::uint64_t seed, const std::string& table_id) {
  return rng::derive_seed(seed, table_id);
}

inline GettResult run_gett(const Corpus& corpus, LlmClient& client, EdgeScorer& scorer, const GettOptions& opt = {}) {
  GettResult res;
  for (const auto& t : corpus.tables) {
    try {
      res.per_table[t.id] = generate_types(t, client, table_seed(opt.seed, t.id));
    } catch (const GenerationFailed&) {
      res.failed_tables.push_back(t.id);
    } catch (const BackendError&) {
      res.failed_tables.push_back(t.id);
    } catch (const TimeoutError&) {
      res.failed_tables.push_back(t.id);
    }
  }
  if (res.per_table.empty() || 2 * res.per_table.size() < corpus.tables.size()) {
    throw Error("entity type generation succeeded for only " + std::to_string(res.per_table.size()) + " of " +
                std::to_string(corpus.tables.size()) + " tables");
  }
  TypeCandidateList V = flatten(res.per_table);
  const std::string root_key = type_key(opt.root_name);
  if (auto it = std::find_if(V.names.begin(), V.names.end(), [&](const auto& n) { return type_key(n) == root_key; });
      it != V.names.end()) {
    V.origin.erase(*it);
    V.names.erase(it);
  }
  if (V.empty()) throw Error("no entity types were generated besides the root");
  res.col = chain_of_layer(V, opt.root_name, client, EdgeFilter{&scorer, opt.edge_threshold}, opt.max_iters);
  res.taxonomy = res.col.taxonomy;
  return res;
}

}  // namespace taxoforge
