#pragma once

// Builds the bundled three-database corpus into a throwaway db root.

#include <filesystem>
#include <string>

#include "testdb.hpp"

#ifndef TESTDATA_DIR
#error "TESTDATA_DIR must be defined by the build"
#endif

namespace testsupport {

inline fs::path testdata_dir() { return fs::path(TESTDATA_DIR); }

inline void build_mini_dbs(const fs::path& db_root) {
  for (const char* db_id : {"shop", "players", "lab"}) {
    const fs::path script =
        testdata_dir() / "mini" / "db_sql" / (std::string(db_id) + ".sql");
    build_database(db_root, db_id, read_file(script));
  }
}

}  // namespace testsupport
