#include "sqlreward/report.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <json.hpp>
#include <stdexcept>

namespace sqlreward {

namespace {

using nlohmann::ordered_json;

struct ComponentSums {
  double ex = 0, ex_classic = 0, cp = 0, cr = 0, tc = 0, qa = 0, composite = 0;

  void add(const RewardBreakdown& b) {
    ex += b.r_ex;
    ex_classic += b.ex_classic;
    cp += b.r_cp;
    cr += b.r_cr;
    tc += b.r_tc;
    qa += b.r_qa;
    composite += b.composite;
  }
};

double percent_of(double sum, std::size_t count) {
  if (count == 0) return 0.0;
  return round_percent(100.0 * sum / static_cast<double>(count));
}

ordered_json item_to_json(const ItemScore& score) {
  const RewardBreakdown& b = score.breakdown;
  ordered_json j;
  j["id"] = score.id;
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

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace

double round_percent(double value) {
  return std::floor(value * 10.0 + 0.5) / 10.0;
}

double weighted_average(const std::vector<double>& scores,
                        const std::vector<std::size_t>& sizes) {
  if (scores.empty() || scores.size() != sizes.size()) {
    throw std::invalid_argument("weighted_average: need matching nonempty vectors");
  }
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    num += static_cast<double>(sizes[i]) * scores[i];
    den += static_cast<double>(sizes[i]);
  }
  if (den == 0.0) throw std::invalid_argument("weighted_average: zero total size");
  return num / den;
}

EvalReport run_eval(Scorer& scorer, const std::vector<EvalInput>& inputs,
                    CompositeKind kind) {
  EvalReport report;
  report.kind = kind;
  report.tolerance = scorer.config().tolerance;
  report.timeout_ms = scorer.config().limits.timeout.count();
  report.row_limit = scorer.config().limits.row_limit;

  for (const EvalInput& input : inputs) {
    DatasetReport ds;
    ds.name = input.dataset.name;
    ds.size = input.dataset.size();

    // Split into scorable items and the ones with no prediction at all.
    std::vector<ScoreItem> work;
    work.reserve(input.dataset.items.size());
    for (const BenchmarkItem& item : input.dataset.items) {
      if (const std::string* raw = input.predictions.find(item.item_id)) {
        work.push_back(
            ScoreItem{item.item_id, item.db_id, item.gold_sql, *raw, kind});
      } else {
        ds.missing_predictions.push_back(item.item_id);
      }
    }

    std::vector<ItemScore> scored = scorer.score_batch(work);

    // Reassemble in dataset order, synthesizing zero scores for the missing.
    std::size_t next = 0;
    ComponentSums sums;
    for (const BenchmarkItem& item : input.dataset.items) {
      ItemScore score;
      if (next < scored.size() && scored[next].id == item.item_id) {
        score = std::move(scored[next]);
        ++next;
      } else {
        score.id = item.item_id;
        score.breakdown.kind = kind;
        score.breakdown.error_class = ErrorClass::MissingPrediction;
      }
      if (score.breakdown.error_class) {
        const std::string key(to_string(*score.breakdown.error_class));
        ++ds.error_histogram[key];
        if (*score.breakdown.error_class == ErrorClass::GoldError) {
          ds.gold_failures.push_back(score.id);
        }
      }
      sums.add(score.breakdown);
      ds.items.push_back(std::move(score));
    }

    ds.ex_refined = percent_of(sums.ex, ds.size);
    ds.ex_classic = percent_of(sums.ex_classic, ds.size);
    ds.cell_precision = percent_of(sums.cp, ds.size);
    ds.cell_recall = percent_of(sums.cr, ds.size);
    ds.tuple_cardinality = percent_of(sums.tc, ds.size);
    ds.qa = percent_of(sums.qa, ds.size);
    ds.composite = percent_of(sums.composite, ds.size);
    report.datasets.push_back(std::move(ds));
  }

  std::vector<double> scores;
  std::vector<std::size_t> sizes;
  for (const DatasetReport& ds : report.datasets) {
    scores.push_back(ds.ex_refined);
    sizes.push_back(ds.size);
  }
  if (!scores.empty()) {
    report.weighted_avg_ex_refined =
        round_percent(weighted_average(scores, sizes));
  }
  return report;
}

std::string report_to_json(const EvalReport& report, bool include_items,
                           int indent) {
  ordered_json j;
  j["metadata"] = {{"generated_at", iso_timestamp()}, {"tool", "sqlreward"}};
  j["config"] = {{"kind", std::string(to_string(report.kind))},
                 {"tolerance", report.tolerance},
                 {"timeout_ms", report.timeout_ms},
                 {"row_limit", report.row_limit}};

  j["datasets"] = ordered_json::array();
  for (const DatasetReport& ds : report.datasets) {
    ordered_json d;
    d["name"] = ds.name;
    d["size"] = ds.size;
    d["scores"] = {{"ex_refined", ds.ex_refined},
                   {"ex_classic", ds.ex_classic},
                   {"cell_precision", ds.cell_precision},
                   {"cell_recall", ds.cell_recall},
                   {"tuple_cardinality", ds.tuple_cardinality},
                   {"qa", ds.qa},
                   {"composite", ds.composite}};
    d["errors"] = ordered_json::object();
    for (const auto& [name, count] : ds.error_histogram) d["errors"][name] = count;
    d["gold_failures"] = ds.gold_failures;
    d["missing_predictions"] = ds.missing_predictions;
    if (include_items) {
      d["items"] = ordered_json::array();
      for (const ItemScore& item : ds.items) {
        d["items"].push_back(item_to_json(item));
      }
    }
    j["datasets"].push_back(std::move(d));
  }
  j["weighted_avg_ex_refined"] = report.weighted_avg_ex_refined;
  return j.dump(indent) + "\n";
}

std::string render_console_table(const EvalReport& report) {
  std::string out;
  char line[256];

  std::size_t name_width = 7;  // "Dataset"
  for (const auto& ds : report.datasets) {
    name_width = std::max(name_width, ds.name.size());
  }
  const int nw = static_cast<int>(name_width);

  std::snprintf(line, sizeof(line),
                "%-*s  %6s  %6s  %6s  %6s  %6s  %6s  %6s  %6s\n", nw, "Dataset",
                "Size", "EX", "EXcls", "CP", "CR", "TC", "QA", "Comp");
  out += line;
  out += std::string(line[0] == '\0' ? 0 : std::strlen(line) - 1, '-') + "\n";
  for (const auto& ds : report.datasets) {
    std::snprintf(line, sizeof(line),
                  "%-*s  %6zu  %6.1f  %6.1f  %6.1f  %6.1f  %6.1f  %6.1f  %6.1f\n",
                  nw, ds.name.c_str(), ds.size, ds.ex_refined, ds.ex_classic,
                  ds.cell_precision, ds.cell_recall, ds.tuple_cardinality,
                  ds.qa, ds.composite);
    out += line;
  }
  std::snprintf(line, sizeof(line), "Weighted avg EX (by size): %.1f\n",
                report.weighted_avg_ex_refined);
  out += line;
  return out;
}

}  // namespace sqlreward
