#pragma once

// Subcommand implementations behind tools/taxoforge.cpp. Each returns an
// exit code: 0 success, 2 GeTT finished with some tables failing, 1 error.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include <json.hpp>

#include "taxoforge/corpus.hpp"
#include "taxoforge/embedding.hpp"
#include "taxoforge/embedding_remote.hpp"
#include "taxoforge/emtt.hpp"
#include "taxoforge/error.hpp"
#include "taxoforge/gett.hpp"
#include "taxoforge/http.hpp"
#include "taxoforge/llm.hpp"
#include "taxoforge/llm_remote.hpp"
#include "taxoforge/metrics.hpp"
#include "taxoforge/subject_column.hpp"
#include "taxoforge/taxonomy.hpp"

namespace taxoforge::cli {

enum class Method { emtt, gett };
enum class Embedder { remote, local_hash };
enum class LlmKind { remote, scripted };
enum class ScorerKind { embedding, llm, constant };

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitPartial = 2;

struct RunConfig {
  std::filesystem::path tables_dir;
  std::optional<std::filesystem::path> gt_path;
  std::optional<std::filesystem::path> annotations_path;
  Method method = Method::emtt;
  Embedder embedder = Embedder::local_hash;
  LlmKind llm = LlmKind::scripted;
  double delta = 0.15;
  Linkage linkage = Linkage::average;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir = "out";
  std::optional<std::filesystem::path> cache_dir;
  std::string llm_url;
  std::string embed_url;
  std::string model;
  std::string embed_model;
  std::optional<std::filesystem::path> script_path;
  std::optional<std::filesystem::path> subject_col_map;
  std::size_t dim = 256;
  double temperature = 0.0;
  std::string root_name = "Thing";
  double edge_threshold = 0.5;
  ScorerKind edge_scorer = ScorerKind::embedding;
  double constant_score = 1.0;
  std::size_t max_iters = 10;
};

inline void validate(const RunConfig& cfg) {
  if (cfg.tables_dir.empty()) throw InvalidArgument("--tables-dir is required");
  if (!(cfg.delta >= 0.0)) throw InvalidArgument("delta must be >= 0");
  if (cfg.dim == 0) throw InvalidArgument("dim must be >= 1");
  if (cfg.annotations_path && !cfg.gt_path) throw InvalidArgument("--annotations needs --gt");
  const bool needs_embedder = cfg.method == Method::emtt || cfg.edge_scorer == ScorerKind::embedding;
  if (needs_embedder && cfg.embedder == Embedder::remote && cfg.embed_url.empty()) {
    throw InvalidArgument("--embedder remote needs --embed-url");
  }
  if (cfg.method == Method::gett) {
    if (cfg.llm == LlmKind::scripted && !cfg.script_path) throw InvalidArgument("--llm scripted needs --script");
    if (cfg.llm == LlmKind::remote && cfg.llm_url.empty()) throw InvalidArgument("--llm remote needs --llm-url");
    if (cfg.max_iters == 0) throw InvalidArgument("max-iters must be >= 1");
  }
}

inline std::unique_ptr<EmbeddingProvider> make_embedder(const RunConfig& cfg) {
  if (cfg.embedder == Embedder::local_hash) return std::make_unique<LocalHashProvider>(cfg.dim, cfg.seed);
  RemoteEmbeddingConfig rc;
  rc.url = cfg.embed_url;
  rc.model = cfg.embed_model;
  rc.api_key = http::api_key_from_env();
  return std::make_unique<RemoteEmbeddingProvider>(std::move(rc));
}

inline std::unique_ptr<ChatBackend> make_backend(const RunConfig& cfg) {
  if (cfg.llm == LlmKind::scripted) return std::make_unique<ScriptedBackend>(ScriptedBackend::load(*cfg.script_path));
  RemoteChatConfig rc;
  rc.url = cfg.llm_url;
  rc.api_key = http::api_key_from_env();
  return std::make_unique<RemoteChatBackend>(std::move(rc));
}

namespace detail {

inline void write_json(const std::filesystem::path& file, const nlohmann::json& j) {
  write_text_file(file, j.dump(2) + "\n");
}

inline void maybe_report(const RunConfig& cfg, const Taxonomy& tax, std::ostream& out) {
  if (!cfg.gt_path) return;
  const auto gt = load_ground_truth(*cfg.gt_path, cfg.annotations_path);
  const auto r = report(tax, gt);
  write_text_file(cfg.out_dir / "report.json", dump_report(r));
  out << dump_report(r);
}

template <typename F>
int guarded(std::ostream& err, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return kExitError;
}

}  // namespace detail

inline Corpus load_corpus(const RunConfig& cfg) {
  Corpus corpus = ingest(cfg.tables_dir);
  SubjectOverrides overrides;
  if (cfg.subject_col_map) overrides = load_subject_overrides(*cfg.subject_col_map);
  assign_subject_columns(corpus, overrides);
  return corpus;
}

inline int cmd_run(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    validate(cfg);
    const Corpus corpus = load_corpus(cfg);
    std::filesystem::create_directories(cfg.out_dir);
    EmbeddingCache cache = cfg.cache_dir ? EmbeddingCache(*cfg.cache_dir) : EmbeddingCache();

    if (cfg.method == Method::emtt) {
      auto provider = make_embedder(cfg);
      EmttOptions opt;
      opt.linkage = cfg.linkage;
      opt.pruning.delta = cfg.delta;
      const auto res = run_emtt(corpus, *provider, cache, opt);
      write_text_file(cfg.out_dir / "taxonomy.json", dump_taxonomy(res.taxonomy));
      detail::write_json(cfg.out_dir / "toplevel.json", toplevel_json(res, corpus));
      detail::write_json(cfg.out_dir / "attributes.json", attributes_json(res, corpus));
      detail::maybe_report(cfg, res.taxonomy, out);
      return kExitOk;
    }

    auto backend = make_backend(cfg);
    Transcript transcript(cfg.out_dir / "transcript.jsonl");
    LlmClient client(*backend, transcript, LlmDefaults{cfg.model, cfg.temperature, 1024});
    std::unique_ptr<EmbeddingProvider> provider;
    std::unique_ptr<EdgeScorer> scorer;
    switch (cfg.edge_scorer) {
      case ScorerKind::embedding:
        provider = make_embedder(cfg);
        scorer = std::make_unique<EmbeddingCosineScorer>(*provider, cache);
        break;
      case ScorerKind::llm: scorer = std::make_unique<LlmYesNoScorer>(client); break;
      case ScorerKind::constant: scorer = std::make_unique<ConstantScorer>(cfg.constant_score); break;
    }
    GettOptions opt;
    opt.root_name = cfg.root_name;
    opt.edge_threshold = cfg.edge_threshold;
    opt.max_iters = cfg.max_iters;
    opt.seed = cfg.seed;
    const auto res = run_gett(corpus, client, *scorer, opt);
    for (const auto& line : res.col.log) err << "note: " << line << "\n";
    for (const auto& id : res.failed_tables) err << "warning: no entity types generated for table " << id << "\n";
    write_text_file(cfg.out_dir / "taxonomy.json", dump_taxonomy(res.taxonomy));
    detail::maybe_report(cfg, res.taxonomy, out);
    return res.partial() ? kExitPartial : kExitOk;
  });
}

inline int cmd_eval(const std::filesystem::path& taxonomy_file, const std::filesystem::path& gt_file,
                    const std::optional<std::filesystem::path>& annotations,
                    const std::optional<std::filesystem::path>& out_file, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const Taxonomy tax = load_taxonomy(taxonomy_file);
    const GroundTruth gt = load_ground_truth(gt_file, annotations);
    const std::string r = dump_report(report(tax, gt));
    if (out_file) write_text_file(*out_file, r);
    out << r;
    return kExitOk;
  });
}

inline int cmd_stats(const std::filesystem::path& taxonomy_file, std::ostream& out = std::cout,
                     std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    const Taxonomy tax = load_taxonomy(taxonomy_file);
    const auto s = tax.stats();
    std::size_t tables = 0;
    for (const auto& [id, t] : tax.types()) tables += t.tables.size();
    nlohmann::json j = {{"type_count", s.type_count},
                        {"depth", s.depth},
                        {"edges", tax.edges().size()},
                        {"roots", tax.roots()},
                        {"assigned_tables", tables}};
    out << j.dump(2) << "\n";
    return kExitOk;
  });
}

// Per table: shape and detected subject column.
inline int cmd_ingest_check(const std::filesystem::path& dir,
                            const std::optional<std::filesystem::path>& subject_col_map,
                            std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  return detail::guarded(err, [&] {
    RunConfig cfg;
    cfg.tables_dir = dir;
    cfg.subject_col_map = subject_col_map;
    const Corpus corpus = load_corpus(cfg);
    nlohmann::json tables = nlohmann::json::array();
    for (const auto& t : corpus.tables) {
      tables.push_back({{"id", t.id},
                        {"rows", t.row_count()},
                        {"columns", t.column_count()},
                        {"subject_column", t.headers[*t.subject_col]},
                        {"subject_index", *t.subject_col}});
    }
    out << nlohmann::json({{"table_count", corpus.tables.size()}, {"tables", std::move(tables)}}).dump(2) << "\n";
    return kExitOk;
  });
}

}  // namespace taxoforge::cli
