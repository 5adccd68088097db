#pragma once

#include <map>
#include <string>
#include <vector>

#include "sqlreward/dataset.hpp"
#include "sqlreward/scoring.hpp"

namespace sqlreward {

// Aggregates for one dataset. Score fields are percentages rounded half-up
// to one decimal; the raw per-item components live in `items`.
struct DatasetReport {
  std::string name;
  std::size_t size = 0;
  double ex_refined = 0.0;
  double ex_classic = 0.0;
  double cell_precision = 0.0;
  double cell_recall = 0.0;
  double tuple_cardinality = 0.0;
  double qa = 0.0;
  double composite = 0.0;
  std::map<std::string, std::size_t> error_histogram;
  std::vector<std::string> gold_failures;        // dataset defects
  std::vector<std::string> missing_predictions;  // scored 0, run continues
  std::vector<ItemScore> items;                  // dataset order
};

struct EvalReport {
  std::vector<DatasetReport> datasets;
  // Size-weighted mean of the per-dataset ex_refined percentages, so it is
  // recomputable from the fields above.
  double weighted_avg_ex_refined = 0.0;
  CompositeKind kind = CompositeKind::Gate;
  double tolerance = 0.0;
  std::int64_t timeout_ms = 0;
  std::size_t row_limit = 0;
};

// Sum(size_i * score_i) / Sum(size_i). Throws std::invalid_argument on empty
// or mismatched inputs.
double weighted_average(const std::vector<double>& scores,
                        const std::vector<std::size_t>& sizes);

// Percentage rounding used throughout the report: half-up, one decimal.
double round_percent(double value);

struct EvalInput {
  DatasetManifest dataset;
  PredictionFile predictions;
};

// Scores every dataset with the given scorer and assembles the full report.
// Items without a prediction score zero under a distinct error class; items
// whose gold query fails are zeroed and listed as gold failures.
EvalReport run_eval(Scorer& scorer, const std::vector<EvalInput>& inputs,
                    CompositeKind kind);

// Deterministic JSON: identical inputs yield byte-identical output. Anything
// run-dependent (timestamp) is confined to the "metadata" object.
std::string report_to_json(const EvalReport& report, bool include_items = true,
                           int indent = 2);

std::string render_console_table(const EvalReport& report);

}  // namespace sqlreward
