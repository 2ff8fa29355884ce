#pragma once

#include <optional>
#include <string>
#include <vector>

namespace smellmap::csv {

// RFC-4180-ish CSV: quoted fields, doubled quotes, embedded commas and
// newlines inside quotes. Rows are vectors of unescaped cells.
std::vector<std::vector<std::string>> parse(const std::string& content);

std::vector<std::vector<std::string>> read_file(const std::string& path);

// Quotes a cell only when needed, so canonical output stays stable.
std::string escape(const std::string& cell);

std::string format_row(const std::vector<std::string>& cells);

// Shortest representation that round-trips through strtod; "nan" for NaN.
std::string format_double(double v);

}  // namespace smellmap::csv
