#pragma once

#include <filesystem>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace hydrocast::csv {

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

struct Table {
  std::string source;  // file name used in error messages
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based file line of each row

  // Index of a named column; throws ParseError naming the file when absent.
  std::size_t column(std::string_view name) const;
};

// Reads a comma-separated file with a header row. Blank lines are skipped;
// rows with the wrong field count raise ParseError.
Table read(const std::filesystem::path& path);
Table parse(std::string_view text, std::string source_name);

std::vector<std::string> split(std::string_view line, char sep = ',');

// Empty field -> NaN (missing). Anything unparsable raises ParseError.
double parse_number(std::string_view field, const std::string& file, std::size_t line);

// Shortest decimal representation that round-trips; NaN -> empty field.
std::string format_number(double value);

void write_text(const std::filesystem::path& path, std::string_view text);

}  // namespace hydrocast::csv
