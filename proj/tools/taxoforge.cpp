#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "taxoforge/cli.hpp"

namespace cli = taxoforge::cli;

namespace {

template <typename E>
using Names = std::map<std::string, E>;

const Names<cli::Method> kMethods{{"emtt", cli::Method::emtt}, {"gett", cli::Method::gett}};
const Names<cli::Embedder> kEmbedders{{"remote", cli::Embedder::remote}, {"local-hash", cli::Embedder::local_hash}};
const Names<cli::LlmKind> kLlms{{"remote", cli::LlmKind::remote}, {"scripted", cli::LlmKind::scripted}};
const Names<cli::ScorerKind> kScorers{
    {"embedding", cli::ScorerKind::embedding}, {"llm", cli::ScorerKind::llm}, {"constant", cli::ScorerKind::constant}};

// Splices the entries of `run --config <file>` in as flags directly after
// `run`, so flags given later on the command line take precedence.
std::vector<std::string> expand_run_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  const auto run = std::find(args.begin(), args.end(), "run");
  if (run == args.end()) return args;
  for (auto it = run + 1; it != args.end(); ++it) {
    std::string file;
    if (*it == "--config" && it + 1 != args.end()) {
      file = *(it + 1);
      it = args.erase(it, it + 2);
    } else if (it->starts_with("--config=")) {
      file = it->substr(9);
      it = args.erase(it);
    } else {
      continue;
    }
    std::vector<std::string> flags;
    for (const auto& item : CLI::ConfigINI().from_file(file)) {
      if (!item.parents.empty() && item.parents != std::vector<std::string>{"run"}) continue;
      std::string name = item.name;
      std::replace(name.begin(), name.end(), '_', '-');
      for (const auto& v : item.inputs) {
        flags.push_back("--" + name);
        flags.push_back(v);
      }
    }
    const auto pos = std::find(args.begin(), args.end(), "run") + 1;
    args.insert(pos, flags.begin(), flags.end());
    break;
  }
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Entity type taxonomy construction for table corpora"};
  app.require_subcommand(1);

  cli::RunConfig cfg;
  std::string tables_dir, out_dir = "out";
  std::string gt, annotations, cache_dir, script, subject_map;

  auto* run = app.add_subcommand("run", "Build a taxonomy from a directory of CSV tables");
  std::string config_file;
  run->add_option("--config", config_file, "key=value file; command-line flags take precedence");
  run->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  run->add_option("--tables-dir", tables_dir, "Directory of <id>.csv tables")->required();
  run->add_option("--method", cfg.method, "emtt or gett")->transform(CLI::CheckedTransformer(kMethods));
  run->add_option("--embedder", cfg.embedder, "remote or local-hash")->transform(CLI::CheckedTransformer(kEmbedders));
  run->add_option("--llm", cfg.llm, "remote or scripted")->transform(CLI::CheckedTransformer(kLlms));
  run->add_option("--delta", cfg.delta, "Pruning silhouette window")->capture_default_str();
  std::string linkage = "average";
  run->add_option("--linkage", linkage, "average, complete or single")
      ->check(CLI::IsMember({"average", "complete", "single"}))
      ->capture_default_str();
  run->add_option("--seed", cfg.seed, "Seed for every random choice")->capture_default_str();
  run->add_option("--out-dir", out_dir, "Artifact directory")->capture_default_str();
  run->add_option("--cache-dir", cache_dir, "Embedding cache directory");
  run->add_option("--gt", gt, "Ground-truth taxonomy JSON; writes report.json");
  run->add_option("--annotations", annotations, "Ground-truth annotations CSV");
  run->add_option("--llm-url", cfg.llm_url, "Chat completions endpoint");
  run->add_option("--embed-url", cfg.embed_url, "Embeddings endpoint");
  run->add_option("--model", cfg.model, "Chat model name");
  run->add_option("--embed-model", cfg.embed_model, "Embedding model name");
  run->add_option("--script", script, "Scripted chat responses (JSON)");
  run->add_option("--subject-col-map", subject_map, "Subject column overrides: <table_id>,<col>");
  run->add_option("--dim", cfg.dim, "local-hash dimension")->capture_default_str();
  run->add_option("--temperature", cfg.temperature, "Chat sampling temperature")->capture_default_str();
  run->add_option("--root-name", cfg.root_name, "Name of the synthetic root")->capture_default_str();
  run->add_option("--edge-threshold", cfg.edge_threshold, "Minimum edge score")->capture_default_str();
  run->add_option("--edge-scorer", cfg.edge_scorer, "embedding, llm or constant")
      ->transform(CLI::CheckedTransformer(kScorers));
  run->add_option("--constant-score", cfg.constant_score, "Score used by the constant scorer")
      ->capture_default_str();
  run->add_option("--max-iters", cfg.max_iters, "Layer iterations before stragglers")->capture_default_str();

  std::string eval_tax, eval_gt, eval_ann, eval_out;
  auto* eval = app.add_subcommand("eval", "Score a taxonomy against a ground truth");
  eval->add_option("taxonomy", eval_tax, "Output taxonomy JSON")->required();
  eval->add_option("--gt", eval_gt, "Ground-truth taxonomy JSON")->required();
  eval->add_option("--annotations", eval_ann, "Ground-truth annotations CSV");
  eval->add_option("--out", eval_out, "Also write the report here");

  std::string stats_tax;
  auto* stats = app.add_subcommand("stats", "Type count and depth of a taxonomy");
  stats->add_option("taxonomy", stats_tax, "Taxonomy JSON")->required();

  std::string check_dir, check_map;
  auto* check = app.add_subcommand("ingest-check", "Parse a table directory and report subject columns");
  check->add_option("tables_dir", check_dir, "Directory of <id>.csv tables")->required();
  check->add_option("--subject-col-map", check_map, "Subject column overrides");

  try {
    auto args = expand_run_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::FileError& e) {
    std::cerr << e.what() << "\n";
    return cli::kExitError;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : cli::kExitError;
  }

  auto opt_path = [](const std::string& s) -> std::optional<std::filesystem::path> {
    if (s.empty()) return std::nullopt;
    return std::filesystem::path(s);
  };

  if (*run) {
    cfg.tables_dir = tables_dir;
    cfg.linkage = taxoforge::parse_linkage(linkage);
    cfg.out_dir = out_dir;
    cfg.gt_path = opt_path(gt);
    cfg.annotations_path = opt_path(annotations);
    cfg.cache_dir = opt_path(cache_dir);
    cfg.script_path = opt_path(script);
    cfg.subject_col_map = opt_path(subject_map);
    return cli::cmd_run(cfg);
  }
  if (*eval) return cli::cmd_eval(eval_tax, eval_gt, opt_path(eval_ann), opt_path(eval_out));
  if (*stats) return cli::cmd_stats(stats_tax);
  return cli::cmd_ingest_check(check_dir, opt_path(check_map));
}
