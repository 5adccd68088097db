#pragma once

#include "sqlreward/table.hpp"

namespace sqlreward {

// Per-pair comparison outcomes for one (gold, predicted) result pair.
struct MetricVector {
  bool ex_classic = false;   // strict set comparison, column order significant
  bool ex_refined = false;   // bag comparison, column order ignored
  double cell_precision = 0.0;
  double cell_recall = 0.0;
  double tuple_cardinality = 0.0;
  double qa = 0.0;           // mean of the three components above
};

// Classic execution accuracy: the distinct-row sets must be identical, with
// cells compared positionally. Duplicate multiplicity is ignored.
bool ex_classic(const ResultTable& gold, const ResultTable& pred);

// Refined execution accuracy: equal row counts, then both tables are
// canonicalized (cells sorted within each row, rows sorted) and compared
// elementwise. `tolerance` only widens that final elementwise equality.
bool ex_refined(const ResultTable& gold, const ResultTable& pred,
                double tolerance = 0.0);

// Fraction of the prediction's distinct cells that also occur in the gold
// table. Both empty -> 1, exactly one empty -> 0.
double cell_precision(const ResultTable& gold, const ResultTable& pred);

// Fraction of the gold table's distinct cells recovered by the prediction.
double cell_recall(const ResultTable& gold, const ResultTable& pred);

// min/max ratio of row counts. Both empty -> 1, exactly one empty -> 0.
double tuple_cardinality(const ResultTable& gold, const ResultTable& pred);

double qa_score(const ResultTable& gold, const ResultTable& pred);

MetricVector metric_vector(const ResultTable& gold, const ResultTable& pred,
                           double tolerance = 0.0);

}  // namespace sqlreward
