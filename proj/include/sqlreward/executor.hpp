#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>

#include "sqlreward/table.hpp"

namespace sqlreward {

struct DatabaseHandle {
  std::string db_id;
  std::filesystem::path path;
};

// Conventional layout: <db_root>/<db_id>/<db_id>.sqlite. Existence is checked
// at execution time (DbMissing), not here.
DatabaseHandle resolve_database(const std::filesystem::path& db_root,
                                const std::string& db_id);

enum class ExecStatus {
  Ok,
  SyntaxError,   // rejected at compile time (parse error, unknown table/column)
  RuntimeError,  // failed during stepping, incl. row-limit breach
  Timeout,       // wall-clock deadline exceeded
  WriteAttempt,  // anything other than a single read-only statement
  DbMissing,
};

std::string_view to_string(ExecStatus status);

struct ExecLimits {
  std::chrono::milliseconds timeout{30000};
  std::size_t row_limit = 100000;
};

struct ExecOutcome {
  ExecStatus status = ExecStatus::Ok;
  ResultTable table;   // populated only when status == Ok
  std::string error;   // engine message for non-Ok statuses
  double elapsed_ms = 0.0;
  bool from_cache = false;

  bool ok() const { return status == ExecStatus::Ok; }
};

// Runs one SQL statement against the database file on a fresh read-only
// connection. An authorizer restricts the statement to plain reads; any
// write, DDL, PRAGMA, ATTACH or transaction control is refused and reported
// as WriteAttempt, as is a multi-statement input. The database file is never
// modified.
ExecOutcome execute(const DatabaseHandle& db, const std::string& sql,
                    const ExecLimits& limits = {});

// Cache-key normalization: trim, and collapse each whitespace run outside
// quoted regions ('…', "…", `…`, […]) to a single space. Quoted content is
// kept verbatim so queries differing only inside literals never share a key.
std::string normalize_sql_key(std::string_view sql);

// Memoizes ExecOutcomes for repeated (database, statement) pairs. Outcomes
// are only valid as long as the database files stay immutable. capacity 0
// means unbounded; otherwise entries are evicted in insertion order.
class ExecCache {
 public:
  explicit ExecCache(std::size_t capacity = 0) : capacity_(capacity) {}

  // Execution limits are part of the key: the same statement under a smaller
  // row cap or deadline can legitimately produce a different outcome.
  static std::string key_for(const DatabaseHandle& db, const std::string& sql,
                             const ExecLimits& limits);

  // Returns the cached outcome or nullptr, bumping the hit/miss counters.
  std::shared_ptr<const ExecOutcome> find(const std::string& key);

  // Last write wins if two threads race on the same key; both outcomes are
  // identical by construction, so this is benign.
  void insert(const std::string& key, ExecOutcome outcome);

  std::uint64_t hits() const { return hits_.load(); }
  std::uint64_t misses() const { return misses_.load(); }
  std::size_t size() const;
  std::size_t capacity() const { return capacity_; }
  void clear();

 private:
  mutable std::shared_mutex mutex_;
  std::unordered_map<std::string, std::shared_ptr<const ExecOutcome>> map_;
  std::deque<std::string> order_;  // insertion order, for eviction
  std::size_t capacity_;
  std::atomic<std::uint64_t> hits_{0};
  std::atomic<std::uint64_t> misses_{0};
};

// execute() with memoization. The returned outcome's from_cache flag tells
// whether the engine was touched; a cached outcome keeps its original
// elapsed_ms.
ExecOutcome execute_cached(ExecCache& cache, const DatabaseHandle& db,
                           const std::string& sql,
                           const ExecLimits& limits = {});

}  // namespace sqlreward
