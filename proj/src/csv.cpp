// SPDX-License-Identifier: Apache-2.0
#include "recal/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace recal {

namespace {

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

std::string format_cell(const Cell& c) {
  if (const auto* s = std::get_if<std::string>(&c)) return quote(*s);
  if (const auto* i = std::get_if<long long>(&c)) return std::to_string(*i);
  const double v = std::get<double>(c);
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void write_csv(std::ostream& os, const Table& t) {
  for (size_t j = 0; j < t.header.size(); ++j) os << (j ? "," : "") << quote(t.header[j]);
  os << '\n';
  for (const auto& row : t.rows) {
    for (size_t j = 0; j < row.size(); ++j) os << (j ? "," : "") << format_cell(row[j]);
    os << '\n';
  }
}

void emit_csv(const Table& t, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  write_csv(f, t);
  f.flush();
  if (!f) throw std::runtime_error("write failed: " + path);
}

}  // namespace recal
