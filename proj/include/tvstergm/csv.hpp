#ifndef TVSTERGM_CSV_HPP
#define TVSTERGM_CSV_HPP

#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "tvstergm/errors.hpp"

namespace tvstergm::csv {

struct Row {
  std::size_t line = 0;  // 1-based line number in the file, header is line 1
  std::vector<std::string> fields;
};

struct Table {
  std::vector<std::string> header;
  std::vector<Row> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
      if (header[k] == name) return k;
    throw InputError("missing column '" + std::string(name) + "'");
  }
};

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// Comma separated, optional double quotes around a field, no embedded newlines.
inline std::vector<std::string> split_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t k = 0; k < line.size(); ++k) {
    char c = line[k];
    if (quoted) {
      if (c == '"') {
        if (k + 1 < line.size() && line[k + 1] == '"') {
          cur.push_back('"');
          ++k;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(trim(cur));
  return out;
}

inline Table read(std::istream& in, const std::string& what = "csv") {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_line(line);
    if (!have_header) {
      if (!fields.empty() && fields[0].size() >= 3 &&
          static_cast<unsigned char>(fields[0][0]) == 0xEF)
        fields[0] = fields[0].substr(3);  // UTF-8 BOM
      t.header = std::move(fields);
      have_header = true;
      continue;
    }
    if (fields.size() != t.header.size())
      throw InputError(what + ": parse error at row " + std::to_string(lineno) + ": expected " +
                       std::to_string(t.header.size()) + " fields, got " +
                       std::to_string(fields.size()));
    t.rows.push_back({lineno, std::move(fields)});
  }
  if (!have_header) throw InputError(what + ": missing header");
  return t;
}

inline Table read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return read(in, path);
}

inline double parse_double(std::string_view s, std::size_t line, std::string_view what) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
    throw InputError("parse error at row " + std::to_string(line) + ": " + std::string(what) +
                     " '" + std::string(s) + "' is not a number");
  return v;
}

inline std::optional<double> parse_optional(std::string_view s, std::size_t line,
                                            std::string_view what) {
  if (s.empty() || s == "NA" || s == "na" || s == "NaN") return std::nullopt;
  return parse_double(s, line, what);
}

inline int parse_int(std::string_view s, std::size_t line, std::string_view what) {
  int v = 0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || p != s.data() + s.size())
    throw InputError("parse error at row " + std::to_string(line) + ": " + std::string(what) +
                     " '" + std::string(s) + "' is not an integer");
  return v;
}

// Shortest representation that round-trips; identical bits give identical text.
inline std::string fmt(double v) {
  if (std::isnan(v)) return "NaN";
  if (std::isinf(v)) return v > 0 ? "Inf" : "-Inf";
  if (v == 0.0) return "0";
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

class Writer {
 public:
  explicit Writer(const std::string& path) : out_(path, std::ios::binary) {
    if (!out_) throw InputError("cannot write '" + path + "'");
  }

  template <class... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    (write_field(fields, first), ...);
    out_ << '\n';
  }

  void row(const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) out_ << (k ? "," : "") << fields[k];
    out_ << '\n';
  }

 private:
  void write_field(const std::string& s, bool& first) { sep(first) << s; }
  void write_field(const char* s, bool& first) { sep(first) << s; }
  void write_field(double v, bool& first) { sep(first) << fmt(v); }
  template <class I>
    requires std::is_integral_v<I>
  void write_field(I v, bool& first) { sep(first) << v; }

  std::ostream& sep(bool& first) {
    if (!first) out_ << ',';
    first = false;
    return out_;
  }

  std::ofstream out_;
};

}  // namespace tvstergm::csv

#endif
