#include "reef/csv.hpp"

#include "reef/common.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <fstream>
#include <random>
#include <sstream>

namespace reef {

std::size_t CsvTable::column(std::string_view name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw InputError(fmt::format("CSV column '{}' not found", name));
  return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

void CsvTable::require_columns(const std::vector<std::string>& names) const {
  std::vector<std::string> missing;
  for (const auto& n : names) {
    if (!has_column(n)) missing.push_back(n);
  }
  if (!missing.empty()) {
    throw InputError(fmt::format("CSV missing columns: {}", fmt::join(missing, ", ")));
  }
}

CsvTable parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_record = [&] {
    end_field();
    if (!(record.size() == 1 && record[0].empty())) records.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\n') {
      end_record();
    } else if (c == '\r') {
      // CRLF
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw InputError("CSV has an unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();

  CsvTable table;
  if (records.empty()) throw InputError("CSV is empty (no header row)");
  table.header = std::move(records.front());
  for (auto& h : table.header) {
    // tolerate a UTF-8 BOM and surrounding spaces in header names
    if (h.rfind("\xEF\xBB\xBF", 0) == 0) h.erase(0, 3);
    h.erase(0, h.find_first_not_of(' '));
    h.erase(h.find_last_not_of(' ') + 1);
  }
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != table.header.size()) {
      throw InputError(fmt::format("CSV row {} has {} fields, header has {}", r + 1,
                                   records[r].size(), table.header.size()));
    }
    table.rows.push_back(std::move(records[r]));
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_csv(ss.str());
  } catch (const InputError& e) {
    throw InputError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

namespace {

void append_field(std::string& out, const std::string& f) {
  if (f.find_first_of(",\"\n\r") == std::string::npos) {
    out += f;
    return;
  }
  out.push_back('"');
  for (char c : f) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
}

void append_record(std::string& out, const std::vector<std::string>& rec) {
  for (std::size_t i = 0; i < rec.size(); ++i) {
    if (i) out.push_back(',');
    append_field(out, rec[i]);
  }
  out.push_back('\n');
}

}  // namespace

std::string to_csv(const CsvTable& table) {
  std::string out;
  append_record(out, table.header);
  for (const auto& r : table.rows) append_record(out, r);
  return out;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::random_device rd;
  const fs::path tmp = path.string() + fmt::format(".tmp{:08x}", rd());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(fmt::format("cannot write '{}'", tmp.string()));
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw InputError(fmt::format("short write to '{}'", tmp.string()));
  }
  fs::rename(tmp, path);
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
  write_file_atomic(path, to_csv(table));
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{}", v);
}

double parse_double(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  if (s == "nan" || s == "NaN" || s == "") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) {
    throw InputError(fmt::format("'{}' is not a number", s));
  }
  return v;
}

}  // namespace reef
