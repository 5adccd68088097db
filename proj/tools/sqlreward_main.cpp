// Command-line front end: batch evaluation, one-shot scoring, metric
// disagreement analysis, and the HTTP service.

#include <CLI11.hpp>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>

#include "sqlreward/report.hpp"
#include "sqlreward/service.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace sqlreward;

namespace {

struct NamedPath {
  std::string name;
  fs::path path;
};

// "--dataset name=path"; a bare path uses the file stem as name.
NamedPath parse_named_path(const std::string& arg) {
  const auto eq = arg.find('=');
  if (eq == std::string::npos) {
    const fs::path p(arg);
    return {p.stem().string(), p};
  }
  return {arg.substr(0, eq), fs::path(arg.substr(eq + 1))};
}

struct CommonOpts {
  std::string db_root;
  std::string kind = "gate";
  std::int64_t timeout_ms = 30000;
  std::int64_t row_limit = 100000;
  double tolerance = 0.0;
  int workers = 0;
  std::size_t cache_capacity = 0;
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool db_root_required = true) {
  auto* root = cmd->add_option("--db-root", opts.db_root,
                               "Directory holding <db_id>/<db_id>.sqlite");
  root->envname("SQLREWARD_DB_ROOT");
  if (db_root_required) root->required();
  cmd->add_option("--kind", opts.kind, "Composite reward kind")
      ->check(CLI::IsMember({"ex", "qa", "exfm", "qafm", "gate"}))
      ->envname("SQLREWARD_KIND");
  cmd->add_option("--timeout-ms", opts.timeout_ms, "Per-query deadline")
      ->envname("SQLREWARD_TIMEOUT_MS");
  cmd->add_option("--row-limit", opts.row_limit, "Per-query row cap")
      ->envname("SQLREWARD_ROW_LIMIT");
  cmd->add_option("--tolerance", opts.tolerance,
                  "Absolute numeric tolerance for table comparison")
      ->envname("SQLREWARD_TOLERANCE");
  cmd->add_option("--workers", opts.workers, "Parallel workers (0 = auto)")
      ->envname("SQLREWARD_WORKERS");
  cmd->add_option("--cache-capacity", opts.cache_capacity,
                  "Execution cache entries (0 = unbounded)")
      ->envname("SQLREWARD_CACHE_CAPACITY");
}

ScoringConfig to_scoring_config(const CommonOpts& opts) {
  ScoringConfig cfg;
  cfg.db_root = opts.db_root;
  cfg.limits.timeout = std::chrono::milliseconds(opts.timeout_ms);
  cfg.limits.row_limit = static_cast<std::size_t>(opts.row_limit);
  cfg.tolerance = opts.tolerance;
  cfg.workers = opts.workers;
  cfg.cache_capacity = opts.cache_capacity;
  return cfg;
}

CompositeKind parse_kind(const std::string& name) {
  const auto kind = composite_kind_from_string(name);
  if (!kind) throw CLI::ValidationError("--kind", "unknown kind " + name);
  return *kind;
}

std::vector<EvalInput> load_inputs(const std::vector<std::string>& dataset_args,
                                   const std::vector<std::string>& pred_args,
                                   const fs::path& db_root) {
  std::map<std::string, fs::path> pred_paths;
  for (const auto& arg : pred_args) {
    const NamedPath np = parse_named_path(arg);
    pred_paths[np.name] = np.path;
  }
  std::vector<EvalInput> inputs;
  for (const auto& arg : dataset_args) {
    const NamedPath np = parse_named_path(arg);
    const auto it = pred_paths.find(np.name);
    if (it == pred_paths.end()) {
      throw std::runtime_error("no --predictions entry named '" + np.name +
                               "'");
    }
    EvalInput input;
    input.dataset = load_dataset(np.path, db_root, np.name);
    input.predictions = load_predictions(it->second);
    inputs.push_back(std::move(input));
  }
  return inputs;
}

void write_or_print(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text;
}

int cmd_eval(const CommonOpts& opts,
             const std::vector<std::string>& dataset_args,
             const std::vector<std::string>& pred_args,
             const std::string& out_path) {
  const auto inputs = load_inputs(dataset_args, pred_args, opts.db_root);
  Scorer scorer(to_scoring_config(opts));
  const EvalReport report = run_eval(scorer, inputs, parse_kind(opts.kind));
  std::cout << render_console_table(report);
  write_or_print(report_to_json(report), out_path);
  return 0;
}

ordered_json breakdown_to_json(const RewardBreakdown& b) {
  ordered_json j;
  j["kind"] = std::string(to_string(b.kind));
  j["executable"] = b.executable;
  j["ex"] = b.r_ex;
  j["ex_classic"] = b.ex_classic;
  j["cp"] = b.r_cp;
  j["cr"] = b.r_cr;
  j["tc"] = b.r_tc;
  j["qa"] = b.r_qa;
  j["fr"] = b.r_fr;
  j["composite"] = b.composite;
  if (b.error_class) j["error_class"] = std::string(to_string(*b.error_class));
  return j;
}

int cmd_score(const CommonOpts& opts, const std::string& db_id,
              const std::string& gold_sql, std::string completion,
              const std::string& completion_file) {
  if (!completion_file.empty()) {
    std::ifstream in(completion_file);
    if (!in) throw std::runtime_error("cannot open " + completion_file);
    completion.assign(std::istreambuf_iterator<char>(in),
                      std::istreambuf_iterator<char>());
  }
  ScoreContext ctx;
  ctx.limits.timeout = std::chrono::milliseconds(opts.timeout_ms);
  ctx.limits.row_limit = static_cast<std::size_t>(opts.row_limit);
  ctx.tolerance = opts.tolerance;
  const DatabaseHandle db = resolve_database(opts.db_root, db_id);
  try {
    const RewardBreakdown b =
        score_completion(ctx, db, gold_sql, completion, parse_kind(opts.kind));
    std::cout << breakdown_to_json(b).dump(2) << "\n";
    return 0;
  } catch (const GoldExecutionError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

int cmd_compare_metrics(const CommonOpts& opts,
                        const std::vector<std::string>& dataset_args,
                        const std::vector<std::string>& pred_args,
                        const std::string& out_path) {
  const auto inputs = load_inputs(dataset_args, pred_args, opts.db_root);
  Scorer scorer(to_scoring_config(opts));

  ordered_json doc;
  doc["datasets"] = ordered_json::array();
  for (const EvalInput& input : inputs) {
    std::vector<ScoreItem> work;
    for (const BenchmarkItem& item : input.dataset.items) {
      if (const std::string* raw = input.predictions.find(item.item_id)) {
        work.push_back(ScoreItem{item.item_id, item.db_id, item.gold_sql, *raw,
                                 CompositeKind::Gate});
      }
    }
    const auto scores = scorer.score_batch(work);

    ordered_json ds;
    ds["name"] = input.dataset.name;
    ds["disagreements"] = ordered_json::array();
    std::map<std::string, std::size_t> counts;
    for (const ItemScore& s : scores) {
      const RewardBreakdown& b = s.breakdown;
      if (!b.executable || b.ex_classic == b.r_ex) continue;
      // Attribute the disagreement: a failed cardinality check with matching
      // row sets is the multiplicity defect; refined passing where classic
      // failed is the column-order defect; anything else is residual.
      std::string label;
      if (b.ex_classic == 1 && b.r_ex == 0) {
        label = b.r_tc < 1.0 ? "MultiplicityLoss" : "Other";
      } else {
        label = "ColumnSensitivity";
      }
      ++counts[label];
      ds["disagreements"].push_back(ordered_json{{"id", s.id},
                                                 {"ex_classic", b.ex_classic},
                                                 {"ex_refined", b.r_ex},
                                                 {"label", label}});
      std::cout << input.dataset.name << "/" << s.id
                << ": classic=" << b.ex_classic << " refined=" << b.r_ex << " "
                << label << "\n";
    }
    ds["counts"] = ordered_json::object();
    for (const auto& [label, n] : counts) ds["counts"][label] = n;
    std::cout << input.dataset.name << ": " << ds["disagreements"].size()
              << " disagreement(s)\n";
    doc["datasets"].push_back(std::move(ds));
  }
  if (!out_path.empty()) write_or_print(doc.dump(2) + "\n", out_path);
  return 0;
}

RewardService* g_service = nullptr;

void handle_signal(int) {
  if (g_service != nullptr) g_service->stop();
}

int cmd_serve(const CommonOpts& opts, const std::string& host, int port) {
  std::error_code ec;
  if (!fs::is_directory(opts.db_root, ec)) {
    std::cerr << "error: --db-root is not a directory: " << opts.db_root
              << "\n";
    return 1;
  }
  ServiceConfig config;
  config.host = host;
  config.port = port;
  config.scoring = to_scoring_config(opts);

  RewardService service(config);
  g_service = &service;
  std::signal(SIGINT, handle_signal);
  std::signal(SIGTERM, handle_signal);

  std::cout << "sqlreward service listening on " << host << ":" << port
            << " (db_root=" << opts.db_root << ")" << std::endl;
  const bool ok = service.listen();  // false only when the bind fails
  g_service = nullptr;
  if (!ok) {
    std::cerr << "error: cannot bind " << host << ":" << port << "\n";
    return 1;
  }
  std::cout << "shutting down\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Execution-based reward engine for Text-to-SQL"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::vector<std::string> dataset_args;
  std::vector<std::string> pred_args;
  std::string out_path;
  std::string db_id;
  std::string gold_sql;
  std::string completion;
  std::string completion_file;
  std::string host = "0.0.0.0";
  int port = 8080;

  auto* eval = app.add_subcommand(
      "eval", "Evaluate prediction files against benchmark datasets");
  add_common(eval, opts);
  eval->add_option("--dataset", dataset_args, "name=path of a dataset JSON")
      ->required();
  eval->add_option("--predictions", pred_args, "name=path of a prediction JSON")
      ->required();
  eval->add_option("--out", out_path, "Write the JSON report here")
      ->envname("SQLREWARD_OUT");

  auto* score =
      app.add_subcommand("score", "Score a single completion against gold SQL");
  add_common(score, opts);
  score->add_option("--db-id", db_id, "Database identifier under --db-root")
      ->required();
  score->add_option("--gold-sql", gold_sql, "Ground-truth SQL")->required();
  score->add_option("--completion", completion, "Raw completion text");
  score->add_option("--completion-file", completion_file,
                    "Read the raw completion from a file");

  auto* compare = app.add_subcommand(
      "compare-metrics",
      "List items where the classic and refined table comparisons disagree");
  add_common(compare, opts);
  compare->add_option("--dataset", dataset_args, "name=path of a dataset JSON")
      ->required();
  compare
      ->add_option("--predictions", pred_args, "name=path of a prediction JSON")
      ->required();
  compare->add_option("--out", out_path, "Write the JSON report here");

  auto* serve = app.add_subcommand("serve", "Run the HTTP scoring service");
  add_common(serve, opts);
  serve->add_option("--host", host, "Bind address")->envname("SQLREWARD_HOST");
  serve->add_option("--port", port, "TCP port")->envname("SQLREWARD_PORT");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) {
      return cmd_eval(opts, dataset_args, pred_args, out_path);
    }
    if (score->parsed()) {
      return cmd_score(opts, db_id, gold_sql, completion, completion_file);
    }
    if (compare->parsed()) {
      return cmd_compare_metrics(opts, dataset_args, pred_args, out_path);
    }
    if (serve->parsed()) {
      return cmd_serve(opts, host, port);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
