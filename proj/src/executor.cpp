#include "sqlreward/executor.hpp"

#include <sqlite3.h>

#include <cctype>
#include <mutex>
#include <utility>

namespace sqlreward {

namespace {

using Clock = std::chrono::steady_clock;

struct ConnCloser {
  void operator()(sqlite3* c) const { sqlite3_close(c); }
};
using Conn = std::unique_ptr<sqlite3, ConnCloser>;

struct StmtFinalizer {
  void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};
using Stmt = std::unique_ptr<sqlite3_stmt, StmtFinalizer>;

// Read-only sandbox: permit the statement itself, column reads, function
// calls and recursive CTEs. Everything else (writes, DDL, PRAGMA, ATTACH,
// transaction control) is denied. Denial usually surfaces as SQLITE_AUTH at
// prepare, but some DDL (e.g. CREATE TABLE) comes back as SQLITE_SCHEMA, so
// the callback also records that it fired.
struct AuthState {
  bool denied = false;
};

int authorize(void* ctx, int action, const char*, const char*, const char*,
              const char*) {
  switch (action) {
    case SQLITE_SELECT:
    case SQLITE_READ:
    case SQLITE_FUNCTION:
    case SQLITE_RECURSIVE:
      return SQLITE_OK;
    default:
      static_cast<AuthState*>(ctx)->denied = true;
      return SQLITE_DENY;
  }
}

struct Deadline {
  Clock::time_point at;
  bool passed() const { return Clock::now() >= at; }
};

int check_deadline(void* ctx) {
  return static_cast<Deadline*>(ctx)->passed() ? 1 : 0;
}

Cell read_cell(sqlite3_stmt* stmt, int col) {
  switch (sqlite3_column_type(stmt, col)) {
    case SQLITE_INTEGER:
      return Cell::integer(sqlite3_column_int64(stmt, col));
    case SQLITE_FLOAT:
      return Cell::real(sqlite3_column_double(stmt, col));
    case SQLITE_TEXT: {
      const auto* bytes = sqlite3_column_text(stmt, col);
      const int n = sqlite3_column_bytes(stmt, col);
      return Cell::text(std::string(reinterpret_cast<const char*>(bytes),
                                    static_cast<std::size_t>(n)));
    }
    case SQLITE_BLOB: {
      const auto* bytes =
          static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt, col));
      const int n = sqlite3_column_bytes(stmt, col);
      Cell::Blob blob;
      if (bytes != nullptr && n > 0) blob.assign(bytes, bytes + n);
      return Cell::blob(std::move(blob));
    }
    default:
      return Cell::null();
  }
}

ExecOutcome finish(ExecOutcome out, Clock::time_point start) {
  out.elapsed_ms =
      std::chrono::duration<double, std::milli>(Clock::now() - start).count();
  return out;
}

ExecOutcome fail(ExecStatus status, std::string message,
                 Clock::time_point start) {
  ExecOutcome out;
  out.status = status;
  out.error = std::move(message);
  return finish(std::move(out), start);
}

}  // namespace

std::string_view to_string(ExecStatus status) {
  switch (status) {
    case ExecStatus::Ok: return "ok";
    case ExecStatus::SyntaxError: return "syntax_error";
    case ExecStatus::RuntimeError: return "runtime_error";
    case ExecStatus::Timeout: return "timeout";
    case ExecStatus::WriteAttempt: return "write_attempt";
    case ExecStatus::DbMissing: return "db_missing";
  }
  return "unknown";
}

DatabaseHandle resolve_database(const std::filesystem::path& db_root,
                                const std::string& db_id) {
  return DatabaseHandle{db_id, db_root / db_id / (db_id + ".sqlite")};
}

ExecOutcome execute(const DatabaseHandle& db, const std::string& sql,
                    const ExecLimits& limits) {
  const auto start = Clock::now();

  std::error_code ec;
  if (!std::filesystem::is_regular_file(db.path, ec)) {
    return fail(ExecStatus::DbMissing,
                "database file not found: " + db.path.string(), start);
  }

  sqlite3* raw = nullptr;
  // Fresh connection per call: no shared statement or page-cache state, so
  // concurrent executions never observe each other.
  int rc = sqlite3_open_v2(db.path.string().c_str(), &raw,
                           SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
  Conn conn(raw);
  if (rc != SQLITE_OK) {
    return fail(ExecStatus::DbMissing,
                conn ? sqlite3_errmsg(conn.get()) : "out of memory", start);
  }

  AuthState auth_state;
  sqlite3_set_authorizer(conn.get(), authorize, &auth_state);
  Deadline deadline{start + limits.timeout};
  // The VM checks the deadline every few hundred opcodes; on expiry the step
  // aborts with SQLITE_INTERRUPT.
  sqlite3_progress_handler(conn.get(), 500, check_deadline, &deadline);

  sqlite3_stmt* raw_stmt = nullptr;
  const char* tail = nullptr;
  rc = sqlite3_prepare_v2(conn.get(), sql.c_str(), -1, &raw_stmt, &tail);
  Stmt stmt(raw_stmt);

  if (rc != SQLITE_OK) {
    const std::string msg = sqlite3_errmsg(conn.get());
    if (rc == SQLITE_AUTH || auth_state.denied) {
      return fail(ExecStatus::WriteAttempt,
                  "statement refused by read-only sandbox: " + msg, start);
    }
    if (rc == SQLITE_INTERRUPT && deadline.passed()) {
      return fail(ExecStatus::Timeout, "deadline exceeded while compiling",
                  start);
    }
    // SQLITE_ERROR at prepare covers both grammar and name-resolution
    // failures; we group them as one compile-time class.
    if (rc == SQLITE_ERROR) return fail(ExecStatus::SyntaxError, msg, start);
    return fail(ExecStatus::RuntimeError, msg, start);
  }

  if (!stmt) {
    // Whitespace/comment-only input compiles to nothing.
    return fail(ExecStatus::SyntaxError, "empty statement", start);
  }

  for (const char* p = tail; p != nullptr && *p != '\0'; ++p) {
    if (!std::isspace(static_cast<unsigned char>(*p))) {
      return fail(ExecStatus::WriteAttempt,
                  "multiple statements are not allowed", start);
    }
  }

  if (sqlite3_stmt_readonly(stmt.get()) == 0) {
    return fail(ExecStatus::WriteAttempt, "statement is not read-only", start);
  }

  ExecOutcome out;
  const int ncols = sqlite3_column_count(stmt.get());
  out.table.columns.reserve(static_cast<std::size_t>(ncols));
  for (int i = 0; i < ncols; ++i) {
    const char* name = sqlite3_column_name(stmt.get(), i);
    out.table.columns.emplace_back(name ? name : "");
  }

  while (true) {
    rc = sqlite3_step(stmt.get());
    if (rc == SQLITE_ROW) {
      if (out.table.rows.size() >= limits.row_limit) {
        return fail(ExecStatus::RuntimeError,
                    "row limit exceeded (" + std::to_string(limits.row_limit) +
                        " rows)",
                    start);
      }
      Row row;
      row.reserve(static_cast<std::size_t>(ncols));
      for (int i = 0; i < ncols; ++i) row.push_back(read_cell(stmt.get(), i));
      out.table.rows.push_back(std::move(row));
      continue;
    }
    if (rc == SQLITE_DONE) break;

    const std::string msg = sqlite3_errmsg(conn.get());
    if (rc == SQLITE_INTERRUPT && deadline.passed()) {
      return fail(ExecStatus::Timeout,
                  "deadline of " + std::to_string(limits.timeout.count()) +
                      " ms exceeded",
                  start);
    }
    if (rc == SQLITE_AUTH || rc == SQLITE_READONLY || auth_state.denied) {
      return fail(ExecStatus::WriteAttempt, msg, start);
    }
    return fail(ExecStatus::RuntimeError, msg, start);
  }

  return finish(std::move(out), start);
}

std::string normalize_sql_key(std::string_view sql) {
  std::string out;
  out.reserve(sql.size());
  char quote = 0;  // active quote character; '[' closes with ']'
  bool pending_space = false;

  for (std::size_t i = 0; i < sql.size(); ++i) {
    const char c = sql[i];
    if (quote != 0) {
      out += c;
      const char closer = quote == '[' ? ']' : quote;
      if (c == closer) {
        // Doubled closing quote is an escape, not a terminator.
        if (quote != '[' && i + 1 < sql.size() && sql[i + 1] == quote) {
          out += sql[++i];
        } else {
          quote = 0;
        }
      }
      continue;
    }
    if (c == '\'' || c == '"' || c == '`' || c == '[') {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      quote = c;
      out += c;
    } else if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
    } else {
      if (pending_space && !out.empty()) out += ' ';
      pending_space = false;
      out += c;
    }
  }
  return out;
}

std::string ExecCache::key_for(const DatabaseHandle& db, const std::string& sql,
                               const ExecLimits& limits) {
  std::string key = db.db_id;
  key += '\x1f';
  key += std::to_string(limits.timeout.count());
  key += '\x1f';
  key += std::to_string(limits.row_limit);
  key += '\x1f';
  key += normalize_sql_key(sql);
  return key;
}

std::shared_ptr<const ExecOutcome> ExecCache::find(const std::string& key) {
  {
    std::shared_lock lock(mutex_);
    auto it = map_.find(key);
    if (it != map_.end()) {
      hits_.fetch_add(1, std::memory_order_relaxed);
      return it->second;
    }
  }
  misses_.fetch_add(1, std::memory_order_relaxed);
  return nullptr;
}

void ExecCache::insert(const std::string& key, ExecOutcome outcome) {
  auto value = std::make_shared<const ExecOutcome>(std::move(outcome));
  std::unique_lock lock(mutex_);
  auto [it, inserted] = map_.insert_or_assign(key, std::move(value));
  if (!inserted) return;  // racing duplicate: value replaced, order unchanged
  order_.push_back(key);
  if (capacity_ > 0) {
    while (map_.size() > capacity_ && !order_.empty()) {
      map_.erase(order_.front());
      order_.pop_front();
    }
  }
}

std::size_t ExecCache::size() const {
  std::shared_lock lock(mutex_);
  return map_.size();
}

void ExecCache::clear() {
  std::unique_lock lock(mutex_);
  map_.clear();
  order_.clear();
}

ExecOutcome execute_cached(ExecCache& cache, const DatabaseHandle& db,
                           const std::string& sql, const ExecLimits& limits) {
  const std::string key = ExecCache::key_for(db, sql, limits);
  if (auto cached = cache.find(key)) {
    ExecOutcome out = *cached;
    out.from_cache = true;
    return out;
  }
  ExecOutcome out = execute(db, sql, limits);
  out.from_cache = false;
  cache.insert(key, out);
  return out;
}

}  // namespace sqlreward
