#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pnrhbt/errors.hpp"

namespace pnrhbt {

/// Locale-independent, shortest round-trip-exact decimal form of a double.
inline std::string format_double(double v) {
  char buf[40];
  if (std::nearbyint(v) == v && std::abs(v) < 9.0e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
    return buf;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  // prefer the shorter form when it round-trips to the same bits
  for (int prec = 1; prec < 17; ++prec) {
    char shorter[40];
    std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
    if (std::strtod(shorter, nullptr) == v) {
      for (char* c = shorter; *c; ++c)
        if (*c == ',') *c = '.';  // pin the separator against odd locales
      return shorter;
    }
  }
  for (char* c = buf; *c; ++c)
    if (*c == ',') *c = '.';
  return buf;
}

inline double parse_double(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || end != begin + s.size())
    throw ParameterError("not a number: '" + s + "'");
  return v;
}

/// A numeric table with a text header row. '#' lines are treated as comments
/// when parsing, so fixture files can carry provenance notes.
struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

inline std::string to_csv_string(const Csv& table) {
  std::string out;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (i) out += ',';
    out += table.header[i];
  }
  out += '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += format_double(row[i]);
    }
    out += '\n';
  }
  return out;
}

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

inline Csv parse_csv_string(const std::string& text) {
  Csv table;
  std::istringstream in(text);
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      table.header = split_fields(line, ',');
      have_header = true;
      continue;
    }
    std::vector<double> row;
    for (const auto& field : split_fields(line, ',')) row.push_back(parse_double(field));
    table.rows.push_back(std::move(row));
  }
  if (!have_header) throw ParameterError("csv: missing header row");
  return table;
}

/// Ordered key-value metadata, serialised one "key = value" per line.
using MetaMap = std::vector<std::pair<std::string, std::string>>;

inline std::string to_meta_string(const MetaMap& meta) {
  std::string out;
  for (const auto& [key, value] : meta) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  }
  return out;
}

inline MetaMap parse_meta_string(const std::string& text) {
  MetaMap meta;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto sep = line.find(" = ");
    if (sep == std::string::npos) throw ParameterError("metadata: malformed line '" + line + "'");
    meta.emplace_back(line.substr(0, sep), line.substr(sep + 3));
  }
  return meta;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path.string());
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open for reading: " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

}  // namespace pnrhbt
