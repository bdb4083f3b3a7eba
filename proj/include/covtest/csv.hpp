#pragma once

// Numeric CSV ingestion: comma separated, optional single header row,
// RFC 4180 quoting, decimal point only.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "covtest/matrix_core.hpp"

namespace covtest {

struct CsvTable {
  DataMatrixd data;
  /// Column names when a header row was read, otherwise empty.
  std::vector<std::string> header;
  /// 1-based line numbers of rows removed by drop_incomplete.
  std::vector<std::size_t> dropped_lines;
};

/// Throws InputError for a missing or empty file, ragged rows, or (unless
/// drop_incomplete) any empty or non-numeric cell; messages name the line.
CsvTable ingest_csv(const std::filesystem::path& path, bool has_header, bool drop_incomplete = false);

/// Same rules on in-memory text; `source` prefixes diagnostics.
CsvTable parse_csv(std::string_view text, bool has_header, bool drop_incomplete,
                   const std::string& source = "<input>");

}  // namespace covtest
