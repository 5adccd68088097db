#include <sqlreward/report.hpp>
#include <sqlreward/scoring.hpp>

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <string>
#include <vector>

#include "support/minicorpus.hpp"
#include "support/testdb.hpp"

using namespace sqlreward;
namespace ts = testsupport;
namespace fs = std::filesystem;

namespace {

std::string canonical(const std::string& sql) {
  return "<reasoning>\nworking on it\n</reasoning>\n<answer>\n```sql\n" + sql +
         "\n```\n</answer>";
}

struct ScoringFixture {
  fs::path root;
  ScoringConfig config;

  ScoringFixture() {
    root = ts::make_temp_dir("sqlreward_sc");
    ts::build_mini_dbs(root / "dbs");
    config.db_root = root / "dbs";
    config.tolerance = 0.0;
    config.workers = 0;
  }
  ~ScoringFixture() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }

  std::vector<ScoreItem> mixed_batch() const {
    return {
        {"a", "shop", "SELECT name FROM products ORDER BY id",
         canonical("SELECT name FROM products ORDER BY id"),
         CompositeKind::Gate},
        {"b", "shop", "SELECT name FROM products WHERE category = 'tools'",
         canonical("SELECT name, price FROM products WHERE category = 'tools'"),
         CompositeKind::Qafm},
        {"c", "shop", "SELECT name FROM products", canonical("SELEC oops"),
         CompositeKind::Gate},
        {"d", "shop", "SELECT name FROM products",
         canonical("DELETE FROM products"), CompositeKind::Exfm},
        {"e", "shop", "SELECT name FROM products", "bare text, no tags",
         CompositeKind::Gate},
        {"f", "shop", "SELEC broken gold",
         canonical("SELECT name FROM products"), CompositeKind::Gate},
        {"g", "ghost", "SELECT 1", canonical("SELECT 1"), CompositeKind::Gate},
        {"h", "players", "SELECT Name, Surname FROM Player",
         canonical("SELECT Surname, Name FROM Player"), CompositeKind::Ex},
        {"i", "lab", "SELECT run_id FROM runs",
         canonical("SELECT run_id FROM runs WHERE run_id <= 2"),
         CompositeKind::Qa},
        {"j", "shop", "SELECT DISTINCT price FROM products",
         canonical("SELECT price FROM products"), CompositeKind::Gate},
    };
  }
};

bool same_breakdown(const RewardBreakdown& x, const RewardBreakdown& y) {
  return x.executable == y.executable && x.r_ex == y.r_ex &&
         x.ex_classic == y.ex_classic && x.r_cp == y.r_cp &&
         x.r_cr == y.r_cr && x.r_tc == y.r_tc && x.r_qa == y.r_qa &&
         x.r_fr == y.r_fr && x.composite == y.composite &&
         x.kind == y.kind && x.error_class == y.error_class;
}

}  // namespace

TEST_CASE_FIXTURE(ScoringFixture, "mixed batch lands on the expected classes") {
  ExecCache cache(256);
  const auto scores = score_items(&cache, config, mixed_batch());
  REQUIRE(scores.size() == 10);

  CHECK(scores[0].id == "a");
  CHECK(scores[0].breakdown.composite == 1.0);
  CHECK(scores[0].breakdown.r_ex == 1);

  CHECK(scores[1].breakdown.r_cp == 0.5);
  CHECK(scores[1].breakdown.r_cr == 1.0);
  CHECK(std::fabs(scores[1].breakdown.composite -
                  (0.95 * scores[1].breakdown.r_qa + 0.05)) <= 1e-12);

  REQUIRE(scores[2].breakdown.error_class.has_value());
  CHECK(*scores[2].breakdown.error_class == ErrorClass::SyntaxError);
  CHECK(scores[2].breakdown.composite == 0.0);
  CHECK(scores[2].breakdown.r_fr == 1);

  REQUIRE(scores[3].breakdown.error_class.has_value());
  CHECK(*scores[3].breakdown.error_class == ErrorClass::WriteAttempt);
  CHECK(std::fabs(scores[3].breakdown.composite - 0.05) <= 1e-12);

  REQUIRE(scores[4].breakdown.error_class.has_value());
  CHECK(*scores[4].breakdown.error_class == ErrorClass::NoSql);
  CHECK(scores[4].breakdown.r_fr == 0);

  // Gold failure is contained, not thrown, and the format reward survives.
  REQUIRE(scores[5].breakdown.error_class.has_value());
  CHECK(*scores[5].breakdown.error_class == ErrorClass::GoldError);
  CHECK(scores[5].breakdown.composite == 0.0);
  CHECK(scores[5].breakdown.r_fr == 1);
  CHECK_FALSE(scores[5].breakdown.executable);

  REQUIRE(scores[6].breakdown.error_class.has_value());
  CHECK(*scores[6].breakdown.error_class == ErrorClass::DbMissing);

  CHECK(scores[7].breakdown.r_ex == 1);
  CHECK(scores[7].breakdown.ex_classic == 0);
  CHECK(scores[7].breakdown.composite == 1.0);

  CHECK(scores[8].breakdown.r_qa == (1.0 + 2.0 / 3.0 + 2.0 / 3.0) / 3.0);
  CHECK(scores[8].breakdown.composite == scores[8].breakdown.r_qa);

  CHECK(scores[9].breakdown.r_ex == 0);
  CHECK(scores[9].breakdown.ex_classic == 1);
  CHECK(scores[9].breakdown.r_tc == 4.0 / 5.0);
}

TEST_CASE_FIXTURE(ScoringFixture, "parallel and serial scoring are identical") {
  const auto batch = mixed_batch();
  for (int workers : {0, 1, 2, 4}) {
    ScoringConfig cfg = config;
    cfg.workers = workers;
    ExecCache parallel_cache(256);
    ExecCache serial_cache(256);
    const auto par = score_items(&parallel_cache, cfg, batch);
    const auto ser = score_items_serial(&serial_cache, cfg, batch);
    REQUIRE(par.size() == ser.size());
    for (std::size_t i = 0; i < par.size(); ++i) {
      CAPTURE(i);
      CHECK(par[i].id == ser[i].id);
      CHECK(same_breakdown(par[i].breakdown, ser[i].breakdown));
    }
  }
}

TEST_CASE_FIXTURE(ScoringFixture, "cached rescoring matches the first pass") {
  Scorer scorer(config);
  const auto batch = mixed_batch();
  const auto first = scorer.score_batch(batch);
  const std::uint64_t misses_after_first = scorer.cache().misses();
  const auto second = scorer.score_batch(batch);
  REQUIRE(first.size() == second.size());
  for (std::size_t i = 0; i < first.size(); ++i)
    CHECK(same_breakdown(first[i].breakdown, second[i].breakdown));
  // The second pass was answered from the cache.
  CHECK(scorer.cache().misses() == misses_after_first);
  CHECK(scorer.cache().hits() > 0);

  // Single-item scoring uses the same shared cache.
  const auto one = scorer.score_one(batch[0]);
  CHECK(same_breakdown(one.breakdown, first[0].breakdown));
}

TEST_CASE_FIXTURE(ScoringFixture, "null cache pointer means uncached scoring") {
  const auto scores = score_items(nullptr, config, mixed_batch());
  REQUIRE(scores.size() == 10);
  CHECK(scores[0].breakdown.composite == 1.0);
}

TEST_CASE("weighted average reproduces frozen aggregate rows") {
  const std::vector<std::size_t> sizes = {1530, 2147, 1034, 535, 508, 1008};
  // Per-dataset accuracy percentages of the gated model and its base.
  const std::vector<double> gated = {59.6, 83.7, 76.0, 75.0, 81.2, 33.5};
  const std::vector<double> base = {49.0, 78.6, 68.3, 68.0, 76.5, 29.0};
  CHECK(std::fabs(weighted_average(gated, sizes) - 68.7) <= 0.05);
  CHECK(std::fabs(weighted_average(base, sizes) - 61.9) <= 0.05);
  CHECK(round_percent(weighted_average(gated, sizes)) == 68.7);
  CHECK(round_percent(weighted_average(base, sizes)) == 61.9);
}

TEST_CASE("weighted average input validation") {
  CHECK_THROWS_AS(weighted_average({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_average({1.0}, {1, 2}), std::invalid_argument);
  CHECK_THROWS_AS(weighted_average({1.0, 2.0}, {0, 0}), std::invalid_argument);
  CHECK(weighted_average({50.0}, {123}) == 50.0);
}

TEST_CASE("percent rounding is half-up to one decimal") {
  CHECK(round_percent(83.74) == 83.7);
  CHECK(round_percent(83.75) == 83.8);
  CHECK(round_percent(83.749999) == 83.7);
  CHECK(round_percent(16.6666666) == 16.7);
  CHECK(round_percent(30.5555555) == 30.6);
  CHECK(round_percent(0.0) == 0.0);
  CHECK(round_percent(100.0) == 100.0);
  CHECK(round_percent(0.04) == 0.0);
  CHECK(round_percent(0.05) == 0.1);
}

namespace {

// Six-item single-dataset evaluation with every failure mode represented.
EvalInput small_eval_input() {
  DatasetManifest manifest;
  manifest.name = "mini";
  const auto add = [&](const char* id, const char* gold) {
    BenchmarkItem item;
    item.item_id = id;
    item.db_id = "shop";
    item.question = "q";
    item.gold_sql = gold;
    manifest.items.push_back(std::move(item));
  };
  add("e1", "SELECT name FROM products ORDER BY id");
  add("e2", "SELECT name FROM products WHERE category = 'tools'");
  add("e3", "SELECT name FROM products");
  add("e4", "SELECT name FROM products");
  add("e5", "SELEC broken gold");
  add("e6", "SELECT name FROM products");

  PredictionFile preds;
  preds.by_id["e1"] = canonical("SELECT name FROM products ORDER BY id");
  preds.by_id["e2"] =
      canonical("SELECT name, price FROM products WHERE category = 'tools'");
  preds.by_id["e3"] = canonical("SELEC 1");
  // e4 deliberately missing.
  preds.by_id["e5"] = canonical("SELECT name FROM products");
  preds.by_id["e6"] = "bare text without tags";
  return EvalInput{std::move(manifest), std::move(preds)};
}

}  // namespace

TEST_CASE_FIXTURE(ScoringFixture, "full evaluation report") {
  Scorer scorer(config);
  const EvalReport report =
      run_eval(scorer, {small_eval_input()}, CompositeKind::Gate);

  REQUIRE(report.datasets.size() == 1);
  const DatasetReport& ds = report.datasets[0];
  CHECK(ds.name == "mini");
  CHECK(ds.size == 6);
  REQUIRE(ds.items.size() == 6);

  // Items come back in dataset order, including the synthesized one.
  CHECK(ds.items[0].id == "e1");
  CHECK(ds.items[3].id == "e4");
  REQUIRE(ds.items[3].breakdown.error_class.has_value());
  CHECK(*ds.items[3].breakdown.error_class == ErrorClass::MissingPrediction);
  CHECK(ds.items[3].breakdown.composite == 0.0);
  CHECK(ds.items[3].breakdown.r_fr == 0);

  CHECK(ds.error_histogram.at("syntax_error") == 1);
  CHECK(ds.error_histogram.at("missing_prediction") == 1);
  CHECK(ds.error_histogram.at("gold_error") == 1);
  CHECK(ds.error_histogram.at("no_sql") == 1);
  CHECK(ds.error_histogram.size() == 4);
  CHECK(ds.gold_failures == std::vector<std::string>{"e5"});
  CHECK(ds.missing_predictions == std::vector<std::string>{"e4"});

  // Hand-computed aggregates: only e1 is exact; e2 contributes partial cell
  // scores; the four failures contribute zeros across the board.
  CHECK(ds.ex_refined == 16.7);
  CHECK(ds.ex_classic == 16.7);
  CHECK(ds.cell_precision == 25.0);
  CHECK(ds.cell_recall == 33.3);
  CHECK(ds.tuple_cardinality == 33.3);
  CHECK(ds.qa == 30.6);
  CHECK(ds.composite == 30.6);

  // Single dataset: the weighted average equals its rounded score.
  CHECK(report.weighted_avg_ex_refined == 16.7);
  CHECK(report.weighted_avg_ex_refined ==
        round_percent(weighted_average({ds.ex_refined}, {ds.size})));
}

TEST_CASE_FIXTURE(ScoringFixture, "weighted average spans datasets by size") {
  DatasetManifest players;
  players.name = "players";
  for (int i = 0; i < 3; ++i) {
    BenchmarkItem item;
    item.item_id = "p" + std::to_string(i);
    item.db_id = "players";
    item.question = "q";
    item.gold_sql = "SELECT Name FROM Player";
    players.items.push_back(std::move(item));
  }
  PredictionFile preds;
  preds.by_id["p0"] = canonical("SELECT Name FROM Player");
  preds.by_id["p1"] = canonical("SELECT Name FROM Player");
  preds.by_id["p2"] = canonical("SELECT Surname FROM Player");

  Scorer scorer(config);
  const EvalReport report = run_eval(
      scorer, {small_eval_input(), EvalInput{players, preds}},
      CompositeKind::Gate);
  REQUIRE(report.datasets.size() == 2);
  CHECK(report.datasets[0].ex_refined == 16.7);
  CHECK(report.datasets[1].ex_refined == 66.7);
  // (6 * 16.7 + 3 * 66.7) / 9 = 33.3666... -> 33.4 after rounding.
  CHECK(report.weighted_avg_ex_refined == 33.4);
}

TEST_CASE_FIXTURE(ScoringFixture, "report json is deterministic and complete") {
  Scorer scorer(config);
  const EvalReport r1 =
      run_eval(scorer, {small_eval_input()}, CompositeKind::Gate);
  const EvalReport r2 =
      run_eval(scorer, {small_eval_input()}, CompositeKind::Gate);

  const std::string j1 = report_to_json(r1);
  const std::string j2 = report_to_json(r2);

  auto d1 = nlohmann::json::parse(j1);
  auto d2 = nlohmann::json::parse(j2);
  // Run-dependent bits are confined to metadata; everything else is stable.
  CHECK(d1.contains("metadata"));
  CHECK(d1["metadata"].contains("generated_at"));
  d1.erase("metadata");
  d2.erase("metadata");
  CHECK(d1.dump() == d2.dump());

  CHECK(d1["config"]["kind"] == "gate");
  CHECK(d1["config"]["timeout_ms"] == 30000);
  REQUIRE(d1["datasets"].size() == 1);
  const auto& ds = d1["datasets"][0];
  CHECK(ds["name"] == "mini");
  CHECK(ds["size"] == 6);
  CHECK(ds["scores"]["ex_refined"] == 16.7);
  REQUIRE(ds["items"].size() == 6);
  CHECK(ds["items"][0]["id"] == "e1");
  CHECK(ds["items"][0]["ex"] == 1);
  CHECK(ds["items"][0]["composite"] == 1.0);
  CHECK_FALSE(ds["items"][0].contains("error_class"));
  CHECK(ds["items"][2]["error_class"] == "syntax_error");
  CHECK(d1["weighted_avg_ex_refined"] == 16.7);

  // Items can be omitted for compact reports.
  const auto compact = nlohmann::json::parse(report_to_json(r1, false));
  CHECK_FALSE(compact["datasets"][0].contains("items"));
}

TEST_CASE_FIXTURE(ScoringFixture, "console table lists datasets and the average") {
  Scorer scorer(config);
  const EvalReport report =
      run_eval(scorer, {small_eval_input()}, CompositeKind::Gate);
  const std::string table = render_console_table(report);
  CHECK(table.find("mini") != std::string::npos);
  CHECK(table.find("16.7") != std::string::npos);
  CHECK(table.find("Weighted avg") != std::string::npos);
}
