#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sqlreward/executor.hpp"
#include "sqlreward/rewards.hpp"

namespace sqlreward {

// One unit of batch-scoring work.
struct ScoreItem {
  std::string id;
  std::string db_id;
  std::string gold_sql;
  std::string completion;  // raw model output, tags included
  CompositeKind kind = CompositeKind::Gate;
};

struct ItemScore {
  std::string id;
  RewardBreakdown breakdown;
};

struct ScoringConfig {
  std::filesystem::path db_root;
  ExecLimits limits;
  double tolerance = 0.0;
  int workers = 0;                 // 0 = hardware default
  std::size_t cache_capacity = 0;  // 0 = unbounded
};

// Scores one item. A failing item (gold error, bad db, timeout) becomes an
// error-classed zero score, never an exception. `cache` may be null.
ItemScore score_item(ExecCache* cache, const ScoringConfig& config,
                     const ScoreItem& item);

// OpenMP-parallel batch kernel; items are independent, output order matches
// input order.
std::vector<ItemScore> score_items(ExecCache* cache,
                                   const ScoringConfig& config,
                                   const std::vector<ScoreItem>& items);

// Serial reference for the parallel kernel; identical results.
std::vector<ItemScore> score_items_serial(ExecCache* cache,
                                          const ScoringConfig& config,
                                          const std::vector<ScoreItem>& items);

// Convenience wrapper owning the shared execution cache.
class Scorer {
 public:
  explicit Scorer(ScoringConfig config)
      : config_(std::move(config)), cache_(config_.cache_capacity) {}

  std::vector<ItemScore> score_batch(const std::vector<ScoreItem>& items) {
    return score_items(&cache_, config_, items);
  }
  std::vector<ItemScore> score_batch_serial(
      const std::vector<ScoreItem>& items) {
    return score_items_serial(&cache_, config_, items);
  }
  ItemScore score_one(const ScoreItem& item) {
    return score_item(&cache_, config_, item);
  }

  const ScoringConfig& config() const { return config_; }
  ExecCache& cache() { return cache_; }
  const ExecCache& cache() const { return cache_; }

 private:
  ScoringConfig config_;
  ExecCache cache_;
};

}  // namespace sqlreward
