#include "sqlreward/advantage.hpp"

#include <cmath>
#include <cstddef>

namespace sqlreward {

namespace {

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;  // population std (divide by N)
};

Moments moments(const std::vector<double>& values) {
  Moments m;
  if (values.empty()) return m;
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (const double v : values) sum += v;
  m.mean = sum / n;
  double sq = 0.0;
  for (const double v : values) {
    const double d = v - m.mean;
    sq += d * d;
  }
  m.stddev = std::sqrt(sq / n);
  return m;
}

std::vector<double> normalize(const std::vector<double>& rewards,
                              const Moments& m, bool divide_by_std,
                              double epsilon) {
  std::vector<double> out(rewards.size(), 0.0);
  if (divide_by_std && m.stddev <= epsilon) return out;  // constant group
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    const double centered = rewards[i] - m.mean;
    out[i] = divide_by_std ? centered / m.stddev : centered;
  }
  return out;
}

std::vector<double> pool(const std::vector<RewardGroup>& groups) {
  std::vector<double> all;
  for (const auto& g : groups) {
    all.insert(all.end(), g.rewards.begin(), g.rewards.end());
  }
  return all;
}

}  // namespace

AdvantageRows advantages_group_scale_serial(
    const std::vector<RewardGroup>& groups, const AdvantageOptions& opts) {
  AdvantageRows out(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out[i] = normalize(groups[i].rewards, moments(groups[i].rewards), true,
                       opts.epsilon);
  }
  return out;
}

AdvantageRows advantages_batch_scale_serial(
    const std::vector<RewardGroup>& groups, const AdvantageOptions& opts) {
  const Moments m = moments(pool(groups));
  AdvantageRows out(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out[i] = normalize(groups[i].rewards, m, true, opts.epsilon);
  }
  return out;
}

AdvantageRows advantages_no_scale_serial(const std::vector<RewardGroup>& groups,
                                         const AdvantageOptions& opts) {
  AdvantageRows out(groups.size());
  for (std::size_t i = 0; i < groups.size(); ++i) {
    out[i] = normalize(groups[i].rewards, moments(groups[i].rewards), false,
                       opts.epsilon);
  }
  return out;
}

AdvantageRows compute_advantages(const std::vector<RewardGroup>& groups,
                                 ScalingStrategy strategy,
                                 const AdvantageOptions& opts) {
  const auto n = static_cast<std::ptrdiff_t>(groups.size());
  AdvantageRows out(groups.size());

  if (strategy == ScalingStrategy::BatchScale) {
    // Pooled reduction first; the per-element pass is embarrassingly parallel.
    double sum = 0.0;
    std::size_t count = 0;
#pragma omp parallel for reduction(+ : sum, count) schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      for (const double v : groups[i].rewards) sum += v;
      count += groups[i].rewards.size();
    }
    Moments m;
    if (count > 0) {
      m.mean = sum / static_cast<double>(count);
      double sq = 0.0;
#pragma omp parallel for reduction(+ : sq) schedule(static)
      for (std::ptrdiff_t i = 0; i < n; ++i) {
        for (const double v : groups[i].rewards) {
          const double d = v - m.mean;
          sq += d * d;
        }
      }
      m.stddev = std::sqrt(sq / static_cast<double>(count));
    }
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      out[i] = normalize(groups[i].rewards, m, true, opts.epsilon);
    }
    return out;
  }

  const bool divide = strategy == ScalingStrategy::GroupScale;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    out[i] = normalize(groups[i].rewards, moments(groups[i].rewards), divide,
                       opts.epsilon);
  }
  return out;
}

AdvantageRows compute_advantages_serial(const std::vector<RewardGroup>& groups,
                                        ScalingStrategy strategy,
                                        const AdvantageOptions& opts) {
  switch (strategy) {
    case ScalingStrategy::GroupScale:
      return advantages_group_scale_serial(groups, opts);
    case ScalingStrategy::BatchScale:
      return advantages_batch_scale_serial(groups, opts);
    case ScalingStrategy::NoScale:
      return advantages_no_scale_serial(groups, opts);
  }
  return {};
}

const char* to_string(ScalingStrategy strategy) {
  switch (strategy) {
    case ScalingStrategy::GroupScale: return "group";
    case ScalingStrategy::BatchScale: return "batch";
    case ScalingStrategy::NoScale: return "none";
  }
  return "unknown";
}

bool strategy_from_string(const std::string& name, ScalingStrategy& out) {
  if (name == "group") {
    out = ScalingStrategy::GroupScale;
  } else if (name == "batch") {
    out = ScalingStrategy::BatchScale;
  } else if (name == "none") {
    out = ScalingStrategy::NoScale;
  } else {
    return false;
  }
  return true;
}

}  // namespace sqlreward
