#include "sqlreward/metrics.hpp"

#include <set>

namespace sqlreward {

namespace {

std::set<Row, RowLess> row_set(const ResultTable& t) {
  return {t.rows.begin(), t.rows.end()};
}

std::set<Cell, CellLess> cell_set(const ResultTable& t) {
  std::set<Cell, CellLess> out;
  for (const Row& row : t.rows) out.insert(row.begin(), row.end());
  return out;
}

}  // namespace

bool ex_classic(const ResultTable& gold, const ResultTable& pred) {
  const auto gs = row_set(gold);
  const auto ps = row_set(pred);
  if (gs.size() != ps.size()) return false;
  auto gi = gs.begin();
  auto pi = ps.begin();
  for (; gi != gs.end(); ++gi, ++pi) {
    if (compare_rows(*gi, *pi) != std::strong_ordering::equal) return false;
  }
  return true;
}

bool ex_refined(const ResultTable& gold, const ResultTable& pred,
                double tolerance) {
  if (gold.row_count() != pred.row_count()) return false;

  ResultTable g = gold;
  ResultTable p = pred;
  for (Row& r : g.rows) r = sort_intra_tuple(std::move(r));
  for (Row& r : p.rows) r = sort_intra_tuple(std::move(r));
  g = sort_tuples(std::move(g));
  p = sort_tuples(std::move(p));

  for (std::size_t i = 0; i < g.rows.size(); ++i) {
    const Row& gr = g.rows[i];
    const Row& pr = p.rows[i];
    if (gr.size() != pr.size()) return false;
    for (std::size_t j = 0; j < gr.size(); ++j) {
      if (!cells_equal(gr[j], pr[j], tolerance)) return false;
    }
  }
  return true;
}

double cell_precision(const ResultTable& gold, const ResultTable& pred) {
  const auto gc = cell_set(gold);
  const auto pc = cell_set(pred);
  if (pc.empty()) return gc.empty() ? 1.0 : 0.0;
  std::size_t shared = 0;
  for (const Cell& c : pc) shared += gc.count(c);
  return static_cast<double>(shared) / static_cast<double>(pc.size());
}

double cell_recall(const ResultTable& gold, const ResultTable& pred) {
  const auto gc = cell_set(gold);
  const auto pc = cell_set(pred);
  if (gc.empty()) return pc.empty() ? 1.0 : 0.0;
  std::size_t shared = 0;
  for (const Cell& c : gc) shared += pc.count(c);
  return static_cast<double>(shared) / static_cast<double>(gc.size());
}

double tuple_cardinality(const ResultTable& gold, const ResultTable& pred) {
  const auto ng = gold.row_count();
  const auto np = pred.row_count();
  if (ng == 0 && np == 0) return 1.0;
  if (ng == 0 || np == 0) return 0.0;
  const auto lo = ng < np ? ng : np;
  const auto hi = ng < np ? np : ng;
  return static_cast<double>(lo) / static_cast<double>(hi);
}

double qa_score(const ResultTable& gold, const ResultTable& pred) {
  return (cell_precision(gold, pred) + cell_recall(gold, pred) +
          tuple_cardinality(gold, pred)) /
         3.0;
}

MetricVector metric_vector(const ResultTable& gold, const ResultTable& pred,
                           double tolerance) {
  MetricVector m;
  m.ex_classic = ex_classic(gold, pred);
  m.ex_refined = ex_refined(gold, pred, tolerance);
  m.cell_precision = cell_precision(gold, pred);
  m.cell_recall = cell_recall(gold, pred);
  m.tuple_cardinality = tuple_cardinality(gold, pred);
  m.qa = (m.cell_precision + m.cell_recall + m.tuple_cardinality) / 3.0;
  return m;
}

}  // namespace sqlreward
