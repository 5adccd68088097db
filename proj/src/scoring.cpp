#include "sqlreward/scoring.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace sqlreward {

ItemScore score_item(ExecCache* cache, const ScoringConfig& config,
                     const ScoreItem& item) {
  ItemScore result;
  result.id = item.id;
  result.breakdown.kind = item.kind;

  ScoreContext ctx;
  ctx.cache = cache;
  ctx.limits = config.limits;
  ctx.tolerance = config.tolerance;

  const DatabaseHandle db = resolve_database(config.db_root, item.db_id);
  try {
    result.breakdown =
        score_completion(ctx, db, item.gold_sql, item.completion, item.kind);
  } catch (const GoldExecutionError&) {
    // Dataset defect, not a model failure: zero components, distinct class.
    result.breakdown = RewardBreakdown{};
    result.breakdown.kind = item.kind;
    result.breakdown.r_fr = format_reward(item.completion);
    result.breakdown.error_class = ErrorClass::GoldError;
  }
  return result;
}

std::vector<ItemScore> score_items(ExecCache* cache,
                                   const ScoringConfig& config,
                                   const std::vector<ScoreItem>& items) {
  std::vector<ItemScore> results(items.size());
  const auto n = static_cast<std::ptrdiff_t>(items.size());

#ifdef _OPENMP
  const int threads = config.workers > 0 ? config.workers : omp_get_max_threads();
  // dynamic: execution times vary wildly between trivial and heavy queries.
#pragma omp parallel for schedule(dynamic) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    // Exceptions must not cross the parallel region.
    try {
      results[i] = score_item(cache, config, items[i]);
    } catch (...) {
      results[i].id = items[i].id;
      results[i].breakdown.kind = items[i].kind;
      results[i].breakdown.error_class = ErrorClass::RuntimeError;
    }
  }
#else
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    results[i] = score_item(cache, config, items[i]);
  }
#endif
  return results;
}

std::vector<ItemScore> score_items_serial(ExecCache* cache,
                                          const ScoringConfig& config,
                                          const std::vector<ScoreItem>& items) {
  std::vector<ItemScore> results;
  results.reserve(items.size());
  for (const auto& item : items) results.push_back(score_item(cache, config, item));
  return results;
}

}  // namespace sqlreward
