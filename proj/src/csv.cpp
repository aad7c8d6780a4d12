#include "ndsense/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

#include "ndsense/error.hpp"

namespace ndsense {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    std::string_view field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    out.emplace_back(trim(field));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view token, std::size_t line) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  auto res = std::from_chars(token.data(), token.data() + token.size(), v);
  if (res.ec != std::errc() || res.ptr != token.data() + token.size() || token.empty())
    throw ParseError(line, "invalid number '" + std::string(token) + "'");
  if (!std::isfinite(v)) throw ParseError(line, "non-finite number '" + std::string(token) + "'");
  return v;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ValidationError("csv: missing column '" + name + "'");
}

bool CsvTable::has_column(const std::string& name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

double CsvTable::number(std::size_t row, std::size_t col) const {
  return parse_double(rows.at(row).at(col), line_numbers.at(row));
}

const std::string* CsvTable::meta_value(const std::string& key) const {
  for (const auto& [k, v] : meta)
    if (k == key) return &v;
  return nullptr;
}

CsvTable read_csv(std::istream& in) {
  CsvTable t;
  std::string raw;
  std::size_t line_no = 0;
  std::size_t block = 0;
  bool pending_break = false;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim(raw);
    if (line.empty()) {
      if (!t.rows.empty()) pending_break = true;
      continue;
    }
    if (line.front() == '#') {
      std::string_view body = trim(line.substr(1));
      auto eq = body.find('=');
      if (eq != std::string_view::npos && body.find(' ') > eq)
        t.meta.emplace_back(std::string(trim(body.substr(0, eq))), std::string(trim(body.substr(eq + 1))));
      continue;
    }
    auto fields = split(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError(line_no, "expected " + std::to_string(t.header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
    if (pending_break) {
      ++block;
      pending_break = false;
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
    t.block.push_back(block);
  }
  if (t.header.empty()) throw ParseError(line_no == 0 ? 1 : line_no, "missing header");
  return t;
}

CsvTable read_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  return read_csv(in);
}

CsvWriter::CsvWriter(std::ostream& out, std::string_view kind, std::initializer_list<std::string_view> columns,
                     const std::vector<std::pair<std::string, std::string>>& meta)
    : out_(out), n_columns_(columns.size()) {
  out_ << "# ndsense " << kind << " format v" << kCsvFormatVersion << '\n';
  for (const auto& [k, v] : meta) out_ << '#' << k << '=' << v << '\n';
  bool first = true;
  for (auto c : columns) {
    if (!first) out_ << ',';
    out_ << c;
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::row(std::initializer_list<double> values) {
  bool first = true;
  for (double v : values) {
    if (!first) out_ << ',';
    out_ << format_double(v);
    first = false;
  }
  out_ << '\n';
}

void CsvWriter::text_row(const std::vector<std::string>& fields) {
  if (fields.size() != n_columns_) throw std::logic_error("CsvWriter: field count mismatch");
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ << ',';
    out_ << fields[i];
  }
  out_ << '\n';
}

void CsvWriter::blank_line() { out_ << '\n'; }

}  // namespace ndsense
