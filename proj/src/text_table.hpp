#pragma once

// Versioned tab-separated record files shared by the pool and trial formats:
//
//   # <magic> <version>
//   col_a<TAB>col_b<TAB>...
//   value<TAB>value<TAB>...
//
// Blank lines and further '#' lines are skipped.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace catpaw::detail {

struct TableRow {
  std::size_t line = 0;
  std::vector<std::string_view> fields;  // ordered as `columns`
};

struct Table {
  int version = 0;
  std::vector<std::string> columns;
  std::vector<std::string> unknown_columns;
  std::vector<int> column_index;  // requested column -> position in file
  std::vector<TableRow> rows;
};

/// Parses `text`, which must begin with the "# <magic> <version>" line.
/// `wanted` lists required column names; rows are returned with fields in
/// that order. Unknown columns are recorded, not rejected. Throws
/// Error(Parse) naming the line for structural problems.
Table parse_table(std::string_view text, std::string_view magic,
                  int max_version, const std::vector<std::string>& wanted);

std::vector<std::string_view> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);
int parse_int(std::string_view s, std::size_t line, std::string_view field);
double parse_double(std::string_view s, std::size_t line,
                    std::string_view field);

}  // namespace catpaw::detail
