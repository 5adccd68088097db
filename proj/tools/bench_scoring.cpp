// Micro-benchmark: OpenMP batch-scoring and advantage kernels against their
// serial reference implementations, on a synthetic database and workload.

#include <sqlite3.h>

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "sqlreward/advantage.hpp"
#include "sqlreward/scoring.hpp"

namespace fs = std::filesystem;
using namespace sqlreward;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start)
      .count();
}

void exec_or_die(sqlite3* conn, const std::string& sql) {
  char* err = nullptr;
  if (sqlite3_exec(conn, sql.c_str(), nullptr, nullptr, &err) != SQLITE_OK) {
    std::fprintf(stderr, "sqlite error: %s\n", err ? err : "?");
    sqlite3_free(err);
    std::exit(1);
  }
}

// <root>/bench/bench.sqlite with one orders table of `rows` rows.
fs::path build_database(const fs::path& root, int rows) {
  const fs::path dir = root / "bench";
  fs::create_directories(dir);
  const fs::path file = dir / "bench.sqlite";
  fs::remove(file);

  sqlite3* conn = nullptr;
  if (sqlite3_open(file.string().c_str(), &conn) != SQLITE_OK) {
    std::fprintf(stderr, "cannot create %s\n", file.string().c_str());
    std::exit(1);
  }
  exec_or_die(conn,
              "CREATE TABLE orders ("
              "id INTEGER PRIMARY KEY, customer TEXT, amount REAL, "
              "region TEXT, year INTEGER)");
  exec_or_die(conn, "BEGIN");
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> amount(1.0, 500.0);
  const char* regions[] = {"north", "south", "east", "west"};
  for (int i = 0; i < rows; ++i) {
    char sql[256];
    std::snprintf(sql, sizeof(sql),
                  "INSERT INTO orders VALUES (%d, 'customer_%d', %.2f, '%s', "
                  "%d)",
                  i + 1, i % 97, amount(rng), regions[i % 4],
                  2015 + (i % 10));
    exec_or_die(conn, sql);
  }
  exec_or_die(conn, "COMMIT");
  sqlite3_close(conn);
  return root;
}

std::vector<ScoreItem> build_items(int count) {
  // A small pool of query shapes, so the cache sees plenty of duplicates —
  // the same access pattern an RL loop produces across epochs.
  std::vector<ScoreItem> items;
  std::mt19937 rng(11);
  std::uniform_int_distribution<int> year(2015, 2024);
  std::uniform_int_distribution<int> shape(0, 3);
  for (int i = 0; i < count; ++i) {
    const int y = year(rng);
    std::string gold;
    std::string pred;
    switch (shape(rng)) {
      case 0:
        gold = "SELECT customer, amount FROM orders WHERE year = " +
               std::to_string(y);
        pred = gold;
        break;
      case 1:
        gold = "SELECT region, COUNT(*) FROM orders GROUP BY region";
        pred = "SELECT COUNT(*), region FROM orders GROUP BY region";
        break;
      case 2:
        gold = "SELECT DISTINCT customer FROM orders WHERE year = " +
               std::to_string(y);
        pred = "SELECT customer FROM orders WHERE year = " + std::to_string(y);
        break;
      default:
        gold = "SELECT amount FROM orders WHERE year = " + std::to_string(y);
        pred = "SELECT amount FROM orders WHERE year = " +
               std::to_string(y == 2024 ? 2015 : y + 1);
        break;
    }
    ScoreItem item;
    item.id = std::to_string(i);
    item.db_id = "bench";
    item.gold_sql = gold;
    item.completion =
        "<reasoning>benchmark</reasoning><answer>```sql\n" + pred +
        "\n```</answer>";
    item.kind = CompositeKind::Gate;
    items.push_back(std::move(item));
  }
  return items;
}

std::vector<RewardGroup> build_groups(int groups, int group_size) {
  std::vector<RewardGroup> out;
  std::mt19937 rng(13);
  std::uniform_real_distribution<double> reward(0.0, 1.0);
  for (int g = 0; g < groups; ++g) {
    RewardGroup group;
    group.prompt_id = std::to_string(g);
    for (int i = 0; i < group_size; ++i) group.rewards.push_back(reward(rng));
    out.push_back(std::move(group));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs OpenMP benchmark for scoring and advantage kernels"};
  int items_count = 400;
  int db_rows = 20000;
  int groups_count = 200000;
  int group_size = 16;
  int workers = 0;
  app.add_option("--items", items_count, "Batch items to score");
  app.add_option("--db-rows", db_rows, "Rows in the synthetic table");
  app.add_option("--groups", groups_count, "Reward groups for advantages");
  app.add_option("--group-size", group_size, "Rewards per group");
  app.add_option("--workers", workers, "OpenMP workers (0 = auto)");
  CLI11_PARSE(app, argc, argv);

  const fs::path root =
      fs::temp_directory_path() / "sqlreward_bench_db";
  build_database(root, db_rows);

  ScoringConfig cfg;
  cfg.db_root = root;
  cfg.workers = workers;
  const auto items = build_items(items_count);

  std::printf("scoring %d items against %d rows\n", items_count, db_rows);
  double composite_serial = 0.0;
  double composite_parallel = 0.0;

  ExecCache serial_cache;
  auto t0 = Clock::now();
  for (const auto& score : score_items_serial(&serial_cache, cfg, items)) {
    composite_serial += score.breakdown.composite;
  }
  const double serial_ms = ms_since(t0);

  ExecCache parallel_cache;
  t0 = Clock::now();
  for (const auto& score : score_items(&parallel_cache, cfg, items)) {
    composite_parallel += score.breakdown.composite;
  }
  const double parallel_ms = ms_since(t0);

  std::printf("  serial   %10.1f ms  (sum %.3f, cache hits %llu)\n", serial_ms,
              composite_serial,
              static_cast<unsigned long long>(serial_cache.hits()));
  std::printf("  parallel %10.1f ms  (sum %.3f, cache hits %llu)\n",
              parallel_ms, composite_parallel,
              static_cast<unsigned long long>(parallel_cache.hits()));
  std::printf("  speedup  %10.2fx\n", serial_ms / parallel_ms);

  std::printf("advantages over %d groups of %d\n", groups_count, group_size);
  const auto groups = build_groups(groups_count, group_size);
  for (const auto strategy :
       {ScalingStrategy::GroupScale, ScalingStrategy::BatchScale,
        ScalingStrategy::NoScale}) {
    t0 = Clock::now();
    const auto serial = compute_advantages_serial(groups, strategy);
    const double s_ms = ms_since(t0);
    t0 = Clock::now();
    const auto parallel = compute_advantages(groups, strategy);
    const double p_ms = ms_since(t0);
    // Keep the optimizer honest.
    volatile double sink = serial[0][0] + parallel[0][0];
    (void)sink;
    std::printf("  %-6s serial %8.1f ms  parallel %8.1f ms  speedup %5.2fx\n",
                to_string(strategy), s_ms, p_ms, s_ms / p_ms);
  }
  return 0;
}
