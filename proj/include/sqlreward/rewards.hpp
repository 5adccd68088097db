#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sqlreward/executor.hpp"
#include "sqlreward/metrics.hpp"

namespace sqlreward {

// Structured view of one raw model completion.
struct Completion {
  std::string raw;
  std::optional<std::string> reasoning;  // inside <reasoning>…</reasoning>
  std::optional<std::string> answer;     // inside the last <answer>…</answer>
  std::optional<std::string> sql;        // extracted query, if any
};

// 1 iff the completion is exactly one <reasoning> block followed by exactly
// one <answer> block, with nothing but whitespace before, between and after.
// Duplicate, nested, unclosed or reordered tags all score 0.
int format_reward(const std::string& raw);

// Pulls the SQL out of the last <answer>…</answer> span: the last closed
// ```sql fence inside it wins; a fence-free answer is used verbatim
// (trimmed). No answer span means no SQL — scored as non-executable
// downstream, never an error here.
std::optional<std::string> extract_sql(const std::string& raw);

Completion parse_completion(const std::string& raw);

enum class CompositeKind { Ex, Qa, Exfm, Qafm, Gate };

std::string_view to_string(CompositeKind kind);
std::optional<CompositeKind> composite_kind_from_string(std::string_view name);

// 0.95 * task + 0.05 * format. The weights are fixed constants of the
// EXFM/QAFM composites; use weighted_composite for anything else.
double composite_weighted(double r_task, int r_fr);

double weighted_composite(double r_task, int r_fr, double w_task, double w_fr);

// Piecewise gate: 0 when not executable; floor 0.1 for executable but weak
// (qa <= 0.1) output with compliant format; otherwise qa. A weak result with
// non-compliant format gets plain qa — the floor is a format bonus only.
double gated_reward(bool executable, double r_qa, int r_fr);

// Why an item scored the way it did, beyond the executor statuses: NoSql
// (nothing to execute), GoldError (dataset defect), MissingPrediction
// (batch-level bookkeeping, see report).
enum class ErrorClass {
  SyntaxError,
  RuntimeError,
  Timeout,
  WriteAttempt,
  DbMissing,
  NoSql,
  GoldError,
  MissingPrediction,
};

std::string_view to_string(ErrorClass e);
ErrorClass error_class_from_status(ExecStatus status);

struct RewardBreakdown {
  bool executable = false;
  int r_ex = 0;         // refined table comparison
  int ex_classic = 0;   // legacy set comparison, kept for contrast reports
  double r_cp = 0.0;
  double r_cr = 0.0;
  double r_tc = 0.0;
  double r_qa = 0.0;
  int r_fr = 0;
  double composite = 0.0;
  CompositeKind kind = CompositeKind::Gate;
  std::optional<ErrorClass> error_class;
};

// The gold query itself failed to execute: a dataset defect, reported apart
// from prediction failures.
class GoldExecutionError : public std::runtime_error {
 public:
  GoldExecutionError(ExecStatus status, const std::string& message)
      : std::runtime_error("gold query failed: " + message), status_(status) {}
  ExecStatus status() const { return status_; }

 private:
  ExecStatus status_;
};

struct ScoreContext {
  ExecCache* cache = nullptr;  // optional; uncached execution when null
  ExecLimits limits;
  double tolerance = 0.0;      // numeric tolerance for the refined comparison
};

// Full pipeline for one completion: extract SQL, execute gold and prediction,
// compare tables, pick the requested composite. Non-executable predictions
// keep their format reward; a failing gold query throws GoldExecutionError.
RewardBreakdown score_completion(const ScoreContext& ctx,
                                 const DatabaseHandle& db,
                                 const std::string& gold_sql,
                                 const std::string& raw_completion,
                                 CompositeKind kind);

// Composite for an already-computed breakdown; used to derive every kind from
// one execution pass.
double composite_for(const RewardBreakdown& b, CompositeKind kind);

}  // namespace sqlreward
