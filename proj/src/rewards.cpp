#include "sqlreward/rewards.hpp"

#include <cctype>

namespace sqlreward {

namespace {

constexpr std::string_view kReasoningOpen = "<reasoning>";
constexpr std::string_view kReasoningClose = "</reasoning>";
constexpr std::string_view kAnswerOpen = "<answer>";
constexpr std::string_view kAnswerClose = "</answer>";

std::size_t count_occurrences(std::string_view text, std::string_view needle) {
  std::size_t count = 0;
  for (std::size_t pos = text.find(needle); pos != std::string_view::npos;
       pos = text.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

bool whitespace_only(std::string_view text) {
  for (const char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

std::string_view trim(std::string_view text) {
  std::size_t b = 0;
  std::size_t e = text.size();
  while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
  return text.substr(b, e - b);
}

// Last well-formed <answer>…</answer> content, scanning pairs left to right.
std::optional<std::string_view> last_answer_span(std::string_view text) {
  std::optional<std::string_view> span;
  std::size_t pos = 0;
  while (true) {
    const std::size_t open = text.find(kAnswerOpen, pos);
    if (open == std::string_view::npos) break;
    const std::size_t body = open + kAnswerOpen.size();
    const std::size_t close = text.find(kAnswerClose, body);
    if (close == std::string_view::npos) break;
    span = text.substr(body, close - body);
    pos = close + kAnswerClose.size();
  }
  return span;
}

bool iequal(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

// Last closed ```sql fence in the span, or nothing. The marker is matched
// case-insensitively and must not be a prefix of a longer word (```sqlite).
std::optional<std::string_view> last_sql_fence(std::string_view span) {
  constexpr std::string_view kFence = "```";
  constexpr std::string_view kLang = "sql";
  std::optional<std::string_view> content;
  std::size_t pos = 0;
  while (true) {
    const std::size_t fence = span.find(kFence, pos);
    if (fence == std::string_view::npos) break;
    const std::size_t lang = fence + kFence.size();
    if (lang + kLang.size() > span.size() ||
        !iequal(span.substr(lang, kLang.size()), kLang)) {
      pos = fence + kFence.size();
      continue;
    }
    const std::size_t body = lang + kLang.size();
    if (body < span.size() &&
        (std::isalnum(static_cast<unsigned char>(span[body])) ||
         span[body] == '_')) {
      pos = fence + kFence.size();  // some other info string, e.g. ```sqlite
      continue;
    }
    const std::size_t close = span.find(kFence, body);
    if (close == std::string_view::npos) break;  // unclosed fence: ignore
    content = span.substr(body, close - body);
    pos = close + kFence.size();
  }
  return content;
}

}  // namespace

int format_reward(const std::string& raw) {
  const std::string_view text = raw;
  if (count_occurrences(text, kReasoningOpen) != 1 ||
      count_occurrences(text, kReasoningClose) != 1 ||
      count_occurrences(text, kAnswerOpen) != 1 ||
      count_occurrences(text, kAnswerClose) != 1) {
    return 0;
  }
  const std::size_t ro = text.find(kReasoningOpen);
  const std::size_t rc = text.find(kReasoningClose);
  const std::size_t ao = text.find(kAnswerOpen);
  const std::size_t ac = text.find(kAnswerClose);
  if (!(ro < rc && rc < ao && ao < ac)) return 0;
  if (!whitespace_only(text.substr(0, ro))) return 0;
  if (!whitespace_only(
          text.substr(rc + kReasoningClose.size(),
                      ao - rc - kReasoningClose.size()))) {
    return 0;
  }
  if (!whitespace_only(text.substr(ac + kAnswerClose.size()))) return 0;
  return 1;
}

std::optional<std::string> extract_sql(const std::string& raw) {
  const auto span = last_answer_span(raw);
  if (!span) return std::nullopt;
  const auto fenced = last_sql_fence(*span);
  const std::string_view sql = fenced ? trim(*fenced) : trim(*span);
  return std::string(sql);
}

Completion parse_completion(const std::string& raw) {
  Completion c;
  c.raw = raw;
  const std::string_view text = raw;
  const std::size_t ro = text.find(kReasoningOpen);
  if (ro != std::string_view::npos) {
    const std::size_t body = ro + kReasoningOpen.size();
    const std::size_t rc = text.find(kReasoningClose, body);
    if (rc != std::string_view::npos) {
      c.reasoning = std::string(text.substr(body, rc - body));
    }
  }
  if (const auto span = last_answer_span(text)) {
    c.answer = std::string(*span);
    c.sql = extract_sql(raw);
  }
  return c;
}

std::string_view to_string(CompositeKind kind) {
  switch (kind) {
    case CompositeKind::Ex: return "ex";
    case CompositeKind::Qa: return "qa";
    case CompositeKind::Exfm: return "exfm";
    case CompositeKind::Qafm: return "qafm";
    case CompositeKind::Gate: return "gate";
  }
  return "unknown";
}

std::optional<CompositeKind> composite_kind_from_string(std::string_view name) {
  if (name == "ex") return CompositeKind::Ex;
  if (name == "qa") return CompositeKind::Qa;
  if (name == "exfm") return CompositeKind::Exfm;
  if (name == "qafm") return CompositeKind::Qafm;
  if (name == "gate") return CompositeKind::Gate;
  return std::nullopt;
}

double composite_weighted(double r_task, int r_fr) {
  return weighted_composite(r_task, r_fr, 0.95, 0.05);
}

double weighted_composite(double r_task, int r_fr, double w_task, double w_fr) {
  return w_task * r_task + w_fr * static_cast<double>(r_fr);
}

double gated_reward(bool executable, double r_qa, int r_fr) {
  if (!executable) return 0.0;
  if (r_qa > 0.1) return r_qa;
  if (r_fr == 1) return 0.1;
  return r_qa;  // weak result without compliant format: no floor
}

std::string_view to_string(ErrorClass e) {
  switch (e) {
    case ErrorClass::SyntaxError: return "syntax_error";
    case ErrorClass::RuntimeError: return "runtime_error";
    case ErrorClass::Timeout: return "timeout";
    case ErrorClass::WriteAttempt: return "write_attempt";
    case ErrorClass::DbMissing: return "db_missing";
    case ErrorClass::NoSql: return "no_sql";
    case ErrorClass::GoldError: return "gold_error";
    case ErrorClass::MissingPrediction: return "missing_prediction";
  }
  return "unknown";
}

ErrorClass error_class_from_status(ExecStatus status) {
  switch (status) {
    case ExecStatus::SyntaxError: return ErrorClass::SyntaxError;
    case ExecStatus::RuntimeError: return ErrorClass::RuntimeError;
    case ExecStatus::Timeout: return ErrorClass::Timeout;
    case ExecStatus::WriteAttempt: return ErrorClass::WriteAttempt;
    case ExecStatus::DbMissing: return ErrorClass::DbMissing;
    case ExecStatus::Ok: break;
  }
  return ErrorClass::RuntimeError;  // Ok never maps to an error class
}

double composite_for(const RewardBreakdown& b, CompositeKind kind) {
  switch (kind) {
    case CompositeKind::Ex:
      return static_cast<double>(b.r_ex);
    case CompositeKind::Qa:
      return b.r_qa;
    case CompositeKind::Exfm:
      return composite_weighted(static_cast<double>(b.r_ex), b.r_fr);
    case CompositeKind::Qafm:
      return composite_weighted(b.r_qa, b.r_fr);
    case CompositeKind::Gate:
      return gated_reward(b.executable, b.r_qa, b.r_fr);
  }
  return 0.0;
}

RewardBreakdown score_completion(const ScoreContext& ctx,
                                 const DatabaseHandle& db,
                                 const std::string& gold_sql,
                                 const std::string& raw_completion,
                                 CompositeKind kind) {
  RewardBreakdown b;
  b.kind = kind;
  b.r_fr = format_reward(raw_completion);

  const auto run = [&](const std::string& sql) {
    return ctx.cache ? execute_cached(*ctx.cache, db, sql, ctx.limits)
                     : execute(db, sql, ctx.limits);
  };

  const auto sql = extract_sql(raw_completion);
  if (!sql || sql->empty()) {
    b.error_class = ErrorClass::NoSql;
    b.composite = composite_for(b, kind);
    return b;
  }

  const ExecOutcome gold = run(gold_sql);
  if (gold.status == ExecStatus::DbMissing) {
    // Infrastructure problem, not a defect in the reference query.
    b.error_class = ErrorClass::DbMissing;
    b.composite = composite_for(b, kind);
    return b;
  }
  if (!gold.ok()) throw GoldExecutionError(gold.status, gold.error);

  const ExecOutcome pred = run(*sql);
  if (!pred.ok()) {
    b.error_class = error_class_from_status(pred.status);
    b.composite = composite_for(b, kind);
    return b;
  }

  b.executable = true;
  const MetricVector m = metric_vector(gold.table, pred.table, ctx.tolerance);
  b.r_ex = m.ex_refined ? 1 : 0;
  b.ex_classic = m.ex_classic ? 1 : 0;
  b.r_cp = m.cell_precision;
  b.r_cr = m.cell_recall;
  b.r_tc = m.tuple_cardinality;
  b.r_qa = m.qa;
  b.composite = composite_for(b, kind);
  return b;
}

}  // namespace sqlreward
