#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "cellgraph/errors.hpp"

namespace cellgraph {

// Comma-separated table with a mandatory header row. Fields may be quoted
// with '"' (doubled quotes escape). Errors carry 1-based line numbers.
class CsvTable {
 public:
  static CsvTable parse(std::string_view text, std::string source = "csv") {
    CsvTable t;
    t.source_ = std::move(source);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    if (text.starts_with("\xEF\xBB\xBF")) pos = 3;
    while (pos < text.size()) {
      const std::size_t nl = text.find('\n', pos);
      std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
      pos = nl == std::string_view::npos ? text.size() : nl + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.empty()) continue;
      auto fields = split(line, t.source_, line_no);
      if (t.header_.empty()) {
        t.header_ = std::move(fields);
        continue;
      }
      if (fields.size() != t.header_.size())
        throw SchemaError(t.where(line_no) + ": expected " + std::to_string(t.header_.size()) + " fields, got " +
                          std::to_string(fields.size()));
      t.rows_.push_back(std::move(fields));
      t.lines_.push_back(line_no);
    }
    if (t.header_.empty()) throw SchemaError(t.source_ + ": missing header row");
    return t;
  }

  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }
  const std::vector<std::string>& row(std::size_t i) const { return rows_[i]; }
  std::size_t line(std::size_t i) const { return lines_[i]; }
  std::string where(std::size_t line_no) const { return source_ + " line " + std::to_string(line_no); }

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
      if (header_[i] == name) return i;
    throw SchemaError(source_ + ": missing column '" + std::string(name) + "'");
  }

  double number(std::size_t row, std::size_t col) const {
    const std::string& f = rows_[row][col];
    double v = 0.0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || p != f.data() + f.size())
      throw SchemaError(where(lines_[row]) + ": column '" + header_[col] + "' is not a number: '" + f + "'");
    return v;
  }

  long long integer(std::size_t row, std::size_t col) const {
    const std::string& f = rows_[row][col];
    long long v = 0;
    auto [p, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc() || p != f.data() + f.size())
      throw SchemaError(where(lines_[row]) + ": column '" + header_[col] + "' is not an integer: '" + f + "'");
    return v;
  }

 private:
  static std::vector<std::string> split(std::string_view line, const std::string& source, std::size_t line_no) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cur.push_back(c);
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        out.push_back(std::move(cur));
        cur.clear();
      } else {
        cur.push_back(c);
      }
    }
    if (quoted) throw SchemaError(source + " line " + std::to_string(line_no) + ": unterminated quote");
    out.push_back(std::move(cur));
    return out;
  }

  std::string source_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::vector<std::size_t> lines_;
};

// Shortest representation that parses back to the same double.
inline std::string format_number(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace cellgraph
