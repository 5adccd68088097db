#include "sqlreward/dataset.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <fstream>
#include <json.hpp>
#include <memory>
#include <sstream>
#include <unordered_set>

namespace sqlreward {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json parse_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw ParseError("cannot open " + file.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
}

std::string id_to_string(const json& value, const char* what) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) {
    return std::to_string(value.get<long long>());
  }
  throw ParseError(std::string(what) + " must be a string or integer");
}

std::string require_string(const json& obj, const char* key, std::size_t idx) {
  const auto it = obj.find(key);
  if (it == obj.end() || !it->is_string()) {
    throw ParseError("item " + std::to_string(idx) + ": missing string field '" +
                     key + "'");
  }
  return it->get<std::string>();
}

// ---- schema extraction ----------------------------------------------------

struct ConnCloser {
  void operator()(sqlite3* c) const { sqlite3_close(c); }
};
using Conn = std::unique_ptr<sqlite3, ConnCloser>;

struct StmtFinalizer {
  void operator()(sqlite3_stmt* s) const { sqlite3_finalize(s); }
};
using Stmt = std::unique_ptr<sqlite3_stmt, StmtFinalizer>;

Stmt prepare_or_throw(sqlite3* conn, const std::string& sql) {
  sqlite3_stmt* stmt = nullptr;
  if (sqlite3_prepare_v2(conn, sql.c_str(), -1, &stmt, nullptr) != SQLITE_OK) {
    const std::string msg = sqlite3_errmsg(conn);
    sqlite3_finalize(stmt);
    throw std::runtime_error("schema query failed: " + msg);
  }
  return Stmt(stmt);
}

std::string quote_identifier(const std::string& name) {
  std::string out = "\"";
  for (const char c : name) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

std::string column_as_text(sqlite3_stmt* stmt, int col) {
  const auto* bytes = sqlite3_column_text(stmt, col);
  const int n = sqlite3_column_bytes(stmt, col);
  return bytes ? std::string(reinterpret_cast<const char*>(bytes),
                             static_cast<std::size_t>(n))
               : std::string();
}

constexpr std::size_t kExampleMaxChars = 64;

// Human-readable rendering of one sample value; text is truncated, blobs
// shown as a hex literal.
std::string render_example(sqlite3_stmt* stmt, int col) {
  if (sqlite3_column_type(stmt, col) == SQLITE_BLOB) {
    static const char* hex = "0123456789abcdef";
    const auto* bytes =
        static_cast<const std::uint8_t*>(sqlite3_column_blob(stmt, col));
    const int n = sqlite3_column_bytes(stmt, col);
    std::string out = "x'";
    for (int i = 0; i < n && out.size() < kExampleMaxChars; ++i) {
      out += hex[bytes[i] >> 4];
      out += hex[bytes[i] & 0xf];
    }
    out += '\'';
    return out;
  }
  std::string text = column_as_text(stmt, col);
  if (text.size() > kExampleMaxChars) text.resize(kExampleMaxChars);
  return text;
}

// ---- description sidecar ---------------------------------------------------

// Minimal RFC 4180 reader: comma-separated, double-quoted fields with ""
// escapes, rows on \n or \r\n.
std::vector<std::vector<std::string>> read_csv(
    const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("cannot open " + file.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  const auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
  };
  const auto end_row = [&] {
    end_field();
    if (row.size() > 1 || !row[0].empty()) rows.push_back(row);
    row.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      end_row();
    } else {
      field += c;
    }
  }
  if (!field.empty() || !row.empty()) end_row();
  return rows;
}

using DescriptionMap =
    std::unordered_map<std::string, std::string>;  // "table\x1fcolumn" -> text

DescriptionMap load_descriptions(const std::filesystem::path& file) {
  const auto rows = read_csv(file);
  if (rows.empty()) return {};
  int t_col = -1, c_col = -1, d_col = -1;
  for (std::size_t i = 0; i < rows[0].size(); ++i) {
    if (rows[0][i] == "table") t_col = static_cast<int>(i);
    if (rows[0][i] == "column") c_col = static_cast<int>(i);
    if (rows[0][i] == "description") d_col = static_cast<int>(i);
  }
  if (t_col < 0 || c_col < 0 || d_col < 0) {
    throw ParseError(file.string() +
                     ": expected table,column,description headers");
  }
  DescriptionMap map;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const auto max_idx =
        static_cast<std::size_t>(std::max(t_col, std::max(c_col, d_col)));
    if (row.size() <= max_idx) continue;
    map[row[static_cast<std::size_t>(t_col)] + '\x1f' +
        row[static_cast<std::size_t>(c_col)]] =
        row[static_cast<std::size_t>(d_col)];
  }
  return map;
}

// ---- prompt template -------------------------------------------------------

constexpr std::string_view kSystemPrompt =
    "You are a data science expert that provides well-reasoned and detailed "
    "responses.\n"
    "Your task is to understand the schema and generate a\n"
    "valid SQL query to answer the question.\n"
    "You first think about the reasoning process as an internal monologue\n"
    "and then provide the user with the answer.\n"
    "Respond in the following format:\n"
    "<reasoning>\n"
    "    ...\n"
    "</reasoning>\n"
    "<answer>\n"
    "    ...\n"
    "</answer>\n";

constexpr std::string_view kUserTemplate =
    "Answer the following question with the SQL code.\n"
    "Use the piece of evidence and base your answer on the database schema.\n"
    "Given the question, the evidence and the database schema,\n"
    "return in the <answer> tags only the SQL script that addresses the "
    "question.\n"
    "\n"
    "Database Engine:\n"
    "SQLite\n"
    "\n"
    "Question:\n"
    "{question}\n"
    "\n"
    "Evidence:\n"
    "{evidence}\n"
    "\n"
    "Database Schema:\n"
    "{schema}\n";

std::string replace_once(std::string text, std::string_view placeholder,
                         const std::string& value) {
  const std::size_t pos = text.find(placeholder);
  if (pos != std::string::npos) text.replace(pos, placeholder.size(), value);
  return text;
}

}  // namespace

DatasetManifest load_dataset(const std::filesystem::path& file,
                             const std::filesystem::path& db_root,
                             const std::string& name) {
  const json doc = parse_json_file(file);
  if (!doc.is_array()) {
    throw ParseError(file.string() + ": expected a top-level array");
  }

  DatasetManifest manifest;
  manifest.name = name.empty() ? file.stem().string() : name;
  manifest.items.reserve(doc.size());

  std::unordered_set<std::string> seen_dbs;
  std::size_t idx = 0;
  for (const auto& entry : doc) {
    if (!entry.is_object()) {
      throw ParseError("item " + std::to_string(idx) + ": expected an object");
    }
    BenchmarkItem item;
    if (const auto it = entry.find("question_id"); it != entry.end()) {
      item.item_id = id_to_string(*it, "question_id");
    } else {
      item.item_id = std::to_string(idx);
    }
    item.question = require_string(entry, "question", idx);
    item.db_id = require_string(entry, "db_id", idx);
    if (const auto it = entry.find("evidence");
        it != entry.end() && it->is_string()) {
      item.evidence = it->get<std::string>();
    }
    // BIRD ships gold SQL under "SQL"; Spider uses "query".
    if (const auto it = entry.find("SQL"); it != entry.end() && it->is_string()) {
      item.gold_sql = it->get<std::string>();
    } else if (const auto q = entry.find("query");
               q != entry.end() && q->is_string()) {
      item.gold_sql = q->get<std::string>();
    }
    if (item.gold_sql.empty()) {
      throw ParseError("item " + std::to_string(idx) +
                       ": missing gold SQL ('SQL' or 'query')");
    }

    if (seen_dbs.insert(item.db_id).second) {
      const auto handle = resolve_database(db_root, item.db_id);
      std::error_code ec;
      if (!std::filesystem::is_regular_file(handle.path, ec)) {
        throw MissingDatabase(item.db_id);
      }
    }
    manifest.items.push_back(std::move(item));
    ++idx;
  }
  return manifest;
}

void save_dataset(const DatasetManifest& manifest,
                  const std::filesystem::path& file) {
  ordered_json doc = ordered_json::array();
  for (const auto& item : manifest.items) {
    ordered_json entry;
    entry["question_id"] = item.item_id;
    entry["db_id"] = item.db_id;
    entry["question"] = item.question;
    if (item.evidence) entry["evidence"] = *item.evidence;
    entry["SQL"] = item.gold_sql;
    doc.push_back(std::move(entry));
  }
  std::ofstream out(file);
  if (!out) throw ParseError("cannot write " + file.string());
  out << doc.dump(2) << '\n';
}

SchemaDoc extract_schema(
    const DatabaseHandle& db, std::size_t k_examples,
    const std::optional<std::filesystem::path>& descriptions_csv) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(db.path, ec)) {
    throw MissingDatabase(db.db_id);
  }

  DescriptionMap descriptions;
  if (descriptions_csv) descriptions = load_descriptions(*descriptions_csv);

  sqlite3* raw = nullptr;
  if (sqlite3_open_v2(db.path.string().c_str(), &raw, SQLITE_OPEN_READONLY,
                      nullptr) != SQLITE_OK) {
    const std::string msg = raw ? sqlite3_errmsg(raw) : "out of memory";
    sqlite3_close(raw);
    throw std::runtime_error("cannot open " + db.path.string() + ": " + msg);
  }
  Conn conn(raw);

  SchemaDoc schema;
  // sqlite_master rows come back in creation order, which is the order the
  // benchmark's DDL listed the tables in.
  Stmt tables = prepare_or_throw(
      conn.get(),
      "SELECT name, sql FROM sqlite_master "
      "WHERE type = 'table' AND name NOT LIKE 'sqlite_%'");
  while (sqlite3_step(tables.get()) == SQLITE_ROW) {
    TableDoc table;
    table.name = column_as_text(tables.get(), 0);
    table.ddl = column_as_text(tables.get(), 1);
    schema.tables.push_back(std::move(table));
  }

  for (TableDoc& table : schema.tables) {
    Stmt info = prepare_or_throw(
        conn.get(), "PRAGMA table_info(" + quote_identifier(table.name) + ")");
    while (sqlite3_step(info.get()) == SQLITE_ROW) {
      ColumnDoc col;
      col.name = column_as_text(info.get(), 1);
      col.declared_type = column_as_text(info.get(), 2);
      if (const auto it = descriptions.find(table.name + '\x1f' + col.name);
          it != descriptions.end()) {
        col.description = it->second;
      }
      table.columns.push_back(std::move(col));
    }

    for (ColumnDoc& col : table.columns) {
      Stmt scan = prepare_or_throw(
          conn.get(), "SELECT " + quote_identifier(col.name) + " FROM " +
                          quote_identifier(table.name));
      std::unordered_set<std::string> seen;
      while (col.examples.size() < k_examples &&
             sqlite3_step(scan.get()) == SQLITE_ROW) {
        if (sqlite3_column_type(scan.get(), 0) == SQLITE_NULL) continue;
        std::string value = render_example(scan.get(), 0);
        if (seen.insert(value).second) col.examples.push_back(std::move(value));
      }
    }
  }
  return schema;
}

std::string render_schema(const SchemaDoc& schema) {
  std::string out;
  bool first = true;
  for (const TableDoc& table : schema.tables) {
    if (!first) out += "\n\n";
    first = false;
    out += table.ddl;
    out += ';';
    for (const ColumnDoc& col : table.columns) {
      out += "\n-- " + table.name + "." + col.name;
      if (!col.declared_type.empty()) out += ": " + col.declared_type;
      out += '.';
      if (col.description) out += " Description: " + *col.description + ".";
      if (!col.examples.empty()) {
        out += " Examples: ";
        for (std::size_t i = 0; i < col.examples.size(); ++i) {
          if (i > 0) out += ", ";
          out += col.examples[i];
        }
        out += '.';
      }
    }
  }
  return out;
}

Prompt render_prompt(const BenchmarkItem& item,
                     const std::string& schema_text) {
  Prompt prompt;
  prompt.system = std::string(kSystemPrompt);
  std::string user = std::string(kUserTemplate);
  user = replace_once(std::move(user), "{question}", item.question);
  user = replace_once(std::move(user), "{evidence}",
                      item.evidence ? *item.evidence : std::string());
  user = replace_once(std::move(user), "{schema}", schema_text);
  prompt.user = std::move(user);
  return prompt;
}

Prompt render_prompt(const BenchmarkItem& item, const SchemaDoc& schema) {
  return render_prompt(item, render_schema(schema));
}

PredictionFile load_predictions(const std::filesystem::path& file) {
  const json doc = parse_json_file(file);
  if (!doc.is_array()) {
    throw ParseError(file.string() + ": expected a top-level array");
  }
  PredictionFile predictions;
  std::size_t idx = 0;
  for (const auto& entry : doc) {
    if (!entry.is_object() || !entry.contains("id") ||
        !entry.contains("output") || !entry["output"].is_string()) {
      throw ParseError("prediction " + std::to_string(idx) +
                       ": expected {id, output}");
    }
    std::string id = id_to_string(entry["id"], "id");
    if (predictions.by_id.count(id) != 0) throw DuplicateId(id);
    predictions.by_id.emplace(std::move(id),
                              entry["output"].get<std::string>());
    ++idx;
  }
  return predictions;
}

}  // namespace sqlreward
