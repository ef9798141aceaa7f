#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace reef {

// In-memory CSV table with a mandatory header row. Fields may be
// double-quoted; embedded quotes are doubled.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header; throws InputError when absent.
  std::size_t column(std::string_view name) const;
  bool has_column(std::string_view name) const;

  // Throws InputError listing every name missing from the header.
  void require_columns(const std::vector<std::string>& names) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

// Serialized with '\n' line endings, quoting only where needed.
std::string to_csv(const CsvTable& table);

// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

// Shortest round-trip decimal representation.
std::string format_double(double v);

double parse_double(std::string_view s);

}  // namespace reef
