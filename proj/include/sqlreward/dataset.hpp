#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sqlreward/executor.hpp"

namespace sqlreward {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class MissingDatabase : public std::runtime_error {
 public:
  explicit MissingDatabase(const std::string& db_id)
      : std::runtime_error("database not found under db_root: " + db_id),
        db_id_(db_id) {}
  const std::string& db_id() const { return db_id_; }

 private:
  std::string db_id_;
};

class DuplicateId : public std::runtime_error {
 public:
  explicit DuplicateId(const std::string& id)
      : std::runtime_error("duplicate prediction id: " + id), id_(id) {}
  const std::string& id() const { return id_; }

 private:
  std::string id_;
};

struct BenchmarkItem {
  std::string item_id;
  std::string question;
  std::optional<std::string> evidence;
  std::string db_id;
  std::string gold_sql;
};

struct DatasetManifest {
  std::string name;
  std::vector<BenchmarkItem> items;

  std::size_t size() const { return items.size(); }
};

// Reads a BIRD/Spider-style JSON array: objects with question, db_id,
// optional evidence, and SQL under "SQL" or "query". item_id comes from
// "question_id" when present, else the array index. Every db_id must resolve
// under db_root.
DatasetManifest load_dataset(const std::filesystem::path& file,
                             const std::filesystem::path& db_root,
                             const std::string& name = "");

// Serializes back to the same JSON shape load_dataset reads (round-trip).
void save_dataset(const DatasetManifest& manifest,
                  const std::filesystem::path& file);

struct ColumnDoc {
  std::string name;
  std::string declared_type;
  std::optional<std::string> description;
  std::vector<std::string> examples;  // rendered values, first-seen order
};

struct TableDoc {
  std::string name;
  std::string ddl;  // CREATE TABLE statement as stored by the engine
  std::vector<ColumnDoc> columns;
};

struct SchemaDoc {
  std::vector<TableDoc> tables;
};

// Walks the live database: one TableDoc per user table in creation order,
// with up to k_examples distinct non-null sample values per column (text
// samples truncated to 64 characters). The optional sidecar is a CSV with
// table,column,description headers.
SchemaDoc extract_schema(
    const DatabaseHandle& db, std::size_t k_examples = 3,
    const std::optional<std::filesystem::path>& descriptions_csv = std::nullopt);

std::string render_schema(const SchemaDoc& schema);

struct Prompt {
  std::string system;
  std::string user;
};

// Fills the fixed prompt template with the item's question, its evidence
// (empty section when absent) and the rendered schema text.
Prompt render_prompt(const BenchmarkItem& item, const std::string& schema_text);
Prompt render_prompt(const BenchmarkItem& item, const SchemaDoc& schema);

struct PredictionFile {
  std::unordered_map<std::string, std::string> by_id;  // item_id -> raw text

  std::size_t size() const { return by_id.size(); }
  const std::string* find(const std::string& id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : &it->second;
  }
};

// Reads a flat JSON array of {id, output} objects; output is the raw
// completion including tags. Duplicate ids are a hard error.
PredictionFile load_predictions(const std::filesystem::path& file);

}  // namespace sqlreward
