#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace sqlreward {

enum class CellKind { Null, Integer, Real, Text, Blob };

// A single SQL value as returned by the engine. Text is byte-exact (no
// collation), blobs are raw bytes.
struct Cell {
  using Blob = std::vector<std::uint8_t>;
  using Value = std::variant<std::monostate, std::int64_t, double, std::string, Blob>;

  Value value;

  static Cell null() { return Cell{}; }
  static Cell integer(std::int64_t v) { return Cell{Value{v}}; }
  static Cell real(double v) { return Cell{Value{v}}; }
  static Cell text(std::string v) { return Cell{Value{std::move(v)}}; }
  static Cell blob(Blob v) { return Cell{Value{std::move(v)}}; }

  CellKind kind() const { return static_cast<CellKind>(value.index()); }

  bool is_null() const { return kind() == CellKind::Null; }
  bool is_numeric() const {
    return kind() == CellKind::Integer || kind() == CellKind::Real;
  }

  std::int64_t as_integer() const { return std::get<std::int64_t>(value); }
  double as_real() const { return std::get<double>(value); }
  const std::string& as_text() const { return std::get<std::string>(value); }
  const Blob& as_blob() const { return std::get<Blob>(value); }

  // Numeric payload widened so that every int64 is represented exactly.
  long double numeric() const;
};

using Row = std::vector<Cell>;

// Execution result: rows in engine order, duplicates preserved (bag).
struct ResultTable {
  std::vector<std::string> columns;
  std::vector<Row> rows;

  std::size_t row_count() const { return rows.size(); }
  std::size_t column_count() const { return columns.size(); }
  bool empty() const { return rows.empty(); }
};

// Total order over cells: Null < numeric (Integer/Real merged, by value,
// NaN smallest and equal to itself) < Text < Blob. Integer k equals Real k.0.
std::strong_ordering canonical_compare(const Cell& a, const Cell& b);

bool canonical_equal(const Cell& a, const Cell& b);

// Equality used by the final elementwise step of the refined table
// comparison: canonical equality, optionally widened by an absolute numeric
// tolerance. The tolerance never participates in sorting.
bool cells_equal(const Cell& a, const Cell& b, double tolerance);

std::strong_ordering compare_rows(const Row& a, const Row& b);

struct CellLess {
  bool operator()(const Cell& a, const Cell& b) const {
    return canonical_compare(a, b) == std::strong_ordering::less;
  }
};

struct RowLess {
  bool operator()(const Row& a, const Row& b) const {
    return compare_rows(a, b) == std::strong_ordering::less;
  }
};

// Cells of one row reordered ascending; the cell multiset is unchanged.
Row sort_intra_tuple(Row row);

// Rows reordered lexicographically; the row multiset is unchanged.
ResultTable sort_tuples(ResultTable table);

}  // namespace sqlreward
