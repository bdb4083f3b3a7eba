#include "covtest/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace covtest {
namespace {

struct Record {
  std::size_t line = 0;
  std::vector<std::string> fields;
};

/// Splits text into records, honouring quoted fields that may contain
/// commas, doubled quotes and line breaks.
std::vector<Record> split_records(std::string_view text, const std::string& source) {
  std::vector<Record> records;
  Record current;
  std::string field;
  bool quoted = false;
  bool field_started = false;
  std::size_t line = 1;
  current.line = line;

  auto end_field = [&] {
    current.fields.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = current.fields.size() == 1 && current.fields[0].find_first_not_of(" \t") == std::string::npos;
    if (!blank) records.push_back(std::move(current));
    current = Record{};
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
        if (c == '\n') ++line;
        field += c;
      }
      continue;
    }
    if (c == '"' && !field_started) {
      quoted = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
      current.line = ++line;
    } else {
      field += c;
      if (c != ' ' && c != '\t') field_started = true;
    }
  }
  if (quoted) throw InputError(source + ": unterminated quoted field starting before line " + std::to_string(line));
  end_record();
  return records;
}

bool parse_cell(const std::string& cell, double& value) {
  const auto first = cell.find_first_not_of(" \t");
  if (first == std::string::npos) return false;
  const auto last = cell.find_last_not_of(" \t");
  const char* begin = cell.data() + first;
  const char* end = cell.data() + last + 1;
  if (*begin == '+') ++begin;
  const auto res = std::from_chars(begin, end, value);
  return res.ec == std::errc() && res.ptr == end && std::isfinite(value);
}

}  // namespace

CsvTable parse_csv(std::string_view text, bool has_header, bool drop_incomplete, const std::string& source) {
  if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
  const std::vector<Record> records = split_records(text, source);
  if (records.empty()) throw InputError(source + ": file is empty");

  std::size_t start = 0;
  CsvTable table{DataMatrixd(MatrixX<double>::Zero(1, 1)), {}, {}};
  const std::size_t p = records.front().fields.size();
  if (has_header) {
    for (const auto& name : records.front().fields) {
      const auto first = name.find_first_not_of(" \t");
      const auto last = name.find_last_not_of(" \t");
      table.header.push_back(first == std::string::npos ? "" : name.substr(first, last - first + 1));
    }
    start = 1;
  }
  if (records.size() == start) throw InputError(source + ": no data rows");

  std::vector<double> values;
  values.reserve((records.size() - start) * p);
  std::size_t n = 0;
  for (std::size_t r = start; r < records.size(); ++r) {
    const Record& rec = records[r];
    if (rec.fields.size() != p) {
      throw InputError(source + ": line " + std::to_string(rec.line) + " has " +
                       std::to_string(rec.fields.size()) + " fields, expected " + std::to_string(p));
    }
    std::vector<double> row(p);
    bool complete = true;
    for (std::size_t j = 0; j < p; ++j) {
      if (parse_cell(rec.fields[j], row[j])) continue;
      if (!drop_incomplete) {
        throw InputError(source + ": line " + std::to_string(rec.line) + ", column " +
                         std::to_string(j + 1) + ": '" + rec.fields[j] + "' is not a finite number");
      }
      complete = false;
      break;
    }
    if (!complete) {
      table.dropped_lines.push_back(rec.line);
      continue;
    }
    values.insert(values.end(), row.begin(), row.end());
    ++n;
  }
  if (n == 0) throw InputError(source + ": every data row was incomplete");

  MatrixX<double> m(static_cast<Index>(n), static_cast<Index>(p));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < p; ++j) m(static_cast<Index>(i), static_cast<Index>(j)) = values[i * p + j];
  table.data = DataMatrixd(std::move(m));
  return table;
}

CsvTable ingest_csv(const std::filesystem::path& path, bool has_header, bool drop_incomplete) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_csv(buffer.str(), has_header, drop_incomplete, path.string());
}

}  // namespace covtest
