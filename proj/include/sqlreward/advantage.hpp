#pragma once

#include <string>
#include <vector>

namespace sqlreward {

// Rewards for the G sampled completions of one prompt.
struct RewardGroup {
  std::string prompt_id;
  std::vector<double> rewards;
};

enum class ScalingStrategy { GroupScale, BatchScale, NoScale };

struct AdvantageOptions {
  // Variance guard: a group (or batch) whose std is <= epsilon is treated as
  // constant and gets all-zero advantages. Above the guard the std is used
  // as-is, so non-degenerate groups are normalized exactly.
  double epsilon = 1e-8;
};

using AdvantageRows = std::vector<std::vector<double>>;

// Serial reference implementations. These are the ground truth the parallel
// kernels are tested against; keep them boring.
AdvantageRows advantages_group_scale_serial(
    const std::vector<RewardGroup>& groups, const AdvantageOptions& opts = {});
AdvantageRows advantages_batch_scale_serial(
    const std::vector<RewardGroup>& groups, const AdvantageOptions& opts = {});
AdvantageRows advantages_no_scale_serial(
    const std::vector<RewardGroup>& groups, const AdvantageOptions& opts = {});

// OpenMP kernels: groups are independent for GroupScale/NoScale; BatchScale
// does a pooled reduction first, then normalizes in parallel.
AdvantageRows compute_advantages(const std::vector<RewardGroup>& groups,
                                 ScalingStrategy strategy,
                                 const AdvantageOptions& opts = {});

// Serial dispatch over the reference implementations.
AdvantageRows compute_advantages_serial(const std::vector<RewardGroup>& groups,
                                        ScalingStrategy strategy,
                                        const AdvantageOptions& opts = {});

const char* to_string(ScalingStrategy strategy);

// Accepts "group", "batch", "none" (the wire names); returns false on
// anything else.
bool strategy_from_string(const std::string& name, ScalingStrategy& out);

}  // namespace sqlreward
