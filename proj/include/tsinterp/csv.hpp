#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tsinterp {

/// Minimal RFC-4180 style reader: comma separated, double-quoted fields,
/// no embedded newlines.
class CsvReader {
 public:
  CsvReader(std::istream& in, std::string source_name);

  const std::vector<std::string>& header() const { return header_; }
  /// Index of a header column, or nullopt.
  std::optional<std::size_t> column(std::string_view name) const;
  /// Like column() but throws ValidationError naming the missing column.
  std::size_t require_column(std::string_view name) const;

  /// Next data row; false at end of input. Rows with the wrong field count
  /// throw ValidationError naming the source and line.
  bool next(std::vector<std::string>& fields);
  std::size_t line_number() const { return line_; }
  const std::string& source() const { return source_; }

 private:
  std::istream& in_;
  std::string source_;
  std::vector<std::string> header_;
  std::size_t line_ = 0;
};

std::vector<std::string> split_csv_line(std::string_view line);
std::string csv_escape(std::string_view field);

/// "%.17g": round-trip exact decimal rendering of a double.
std::string format_double(double value);

/// Strict numeric parse of a whole field.
bool parse_double(std::string_view text, double& out);

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');

}  // namespace tsinterp
