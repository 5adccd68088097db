#include "sqlreward/table.hpp"

#include <algorithm>
#include <cmath>

namespace sqlreward {

namespace {

// Kind rank for ordering purposes. Integer and Real share a rank so that
// numerics compare by value across representations.
int kind_rank(CellKind k) {
  switch (k) {
    case CellKind::Null: return 0;
    case CellKind::Integer: return 1;
    case CellKind::Real: return 1;
    case CellKind::Text: return 2;
    case CellKind::Blob: return 3;
  }
  return 4;  // unreachable
}

std::strong_ordering compare_numeric(const Cell& a, const Cell& b) {
  const long double x = a.numeric();
  const long double y = b.numeric();
  const bool nx = std::isnan(x);
  const bool ny = std::isnan(y);
  // NaN sorts below every other numeric and equals itself, so sorting stays
  // a strict weak order even for pathological REAL columns.
  if (nx || ny) {
    if (nx && ny) return std::strong_ordering::equal;
    return nx ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  if (x < y) return std::strong_ordering::less;
  if (x > y) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

template <typename Bytes>
std::strong_ordering compare_bytes(const Bytes& a, const Bytes& b) {
  const auto cmp = a.compare(b);
  if (cmp < 0) return std::strong_ordering::less;
  if (cmp > 0) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::strong_ordering compare_blob(const Cell::Blob& a, const Cell::Blob& b) {
  if (a < b) return std::strong_ordering::less;
  if (b < a) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace

long double Cell::numeric() const {
  if (kind() == CellKind::Integer) {
    // long double on x86-64 has a 64-bit mantissa, so every int64 round-trips.
    return static_cast<long double>(as_integer());
  }
  return static_cast<long double>(as_real());
}

std::strong_ordering canonical_compare(const Cell& a, const Cell& b) {
  const int ra = kind_rank(a.kind());
  const int rb = kind_rank(b.kind());
  if (ra != rb) return ra <=> rb;

  switch (a.kind()) {
    case CellKind::Null:
      return std::strong_ordering::equal;
    case CellKind::Integer:
    case CellKind::Real:
      return compare_numeric(a, b);
    case CellKind::Text:
      return compare_bytes(a.as_text(), b.as_text());
    case CellKind::Blob:
      return compare_blob(a.as_blob(), b.as_blob());
  }
  return std::strong_ordering::equal;  // unreachable
}

bool canonical_equal(const Cell& a, const Cell& b) {
  return canonical_compare(a, b) == std::strong_ordering::equal;
}

bool cells_equal(const Cell& a, const Cell& b, double tolerance) {
  if (tolerance > 0.0 && a.is_numeric() && b.is_numeric()) {
    const long double x = a.numeric();
    const long double y = b.numeric();
    if (std::isnan(x) || std::isnan(y)) return std::isnan(x) && std::isnan(y);
    const long double diff = x >= y ? x - y : y - x;
    return diff <= static_cast<long double>(tolerance);
  }
  return canonical_equal(a, b);
}

std::strong_ordering compare_rows(const Row& a, const Row& b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = canonical_compare(a[i], b[i]);
    if (c != std::strong_ordering::equal) return c;
  }
  return a.size() <=> b.size();
}

Row sort_intra_tuple(Row row) {
  std::stable_sort(row.begin(), row.end(), CellLess{});
  return row;
}

ResultTable sort_tuples(ResultTable table) {
  std::stable_sort(table.rows.begin(), table.rows.end(), RowLess{});
  return table;
}

}  // namespace sqlreward
