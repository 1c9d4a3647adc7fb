#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ascf {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by exact header name, if present.
  std::optional<std::size_t> column(std::string_view name) const;
};

/// RFC 4180-style reader: comma separated, double-quote escaping, optional
/// UTF-8 BOM, LF or CRLF line endings. Rows must have as many cells as the
/// header.
CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

void write_csv_row(std::ostream& out, const std::vector<std::string>& cells);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

/// Strict decimal parse ("." separator, surrounding blanks allowed). Returns
/// nullopt for anything else, including an empty cell.
std::optional<double> parse_double(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace ascf
