// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <ostream>
#include <string>
#include <variant>
#include <vector>

namespace recal {

using Cell = std::variant<std::string, double, long long>;

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<Cell>> rows;
};

// Floats at 9 significant digits.
std::string format_cell(const Cell& c);

// RFC-4180 quoting, LF line endings.
void write_csv(std::ostream& os, const Table& t);
void emit_csv(const Table& t, const std::string& path);

}  // namespace recal
