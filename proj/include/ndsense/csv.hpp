#pragma once

#include <cstddef>
#include <initializer_list>
#include <iosfwd>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace ndsense {

inline constexpr int kCsvFormatVersion = 1;

/// Shortest decimal text that round-trips to the same double.
std::string format_double(double v);

/// Parses a finite double; throws ParseError naming the line on failure.
double parse_double(std::string_view token, std::size_t line);

/// Parsed CSV table. Comment lines starting with "#key=value" become metadata,
/// other comment lines are skipped, and blank lines separate blocks.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line of each row
  std::vector<std::size_t> block;         // blank-line separated block index of each row
  std::vector<std::pair<std::string, std::string>> meta;

  /// Column index by name; throws ValidationError if absent.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
  const std::string* meta_value(const std::string& key) const;
};

/// Reads a table whose first non-comment line is the header. Every row must
/// have as many fields as the header.
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Writes a versioned header comment, metadata lines and the column header.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::string_view kind, std::initializer_list<std::string_view> columns,
            const std::vector<std::pair<std::string, std::string>>& meta = {});
  void row(std::initializer_list<double> values);
  /// Mixed text/number rows; the caller formats numbers with format_double.
  void text_row(const std::vector<std::string>& fields);
  void blank_line();

 private:
  std::ostream& out_;
  std::size_t n_columns_;
};

}  // namespace ndsense
