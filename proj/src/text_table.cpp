#include "text_table.hpp"

#include <charconv>
#include <cmath>

#include "catpaw/error.hpp"

namespace catpaw::detail {

namespace {

std::string at_line(std::size_t line) {
  return "line " + std::to_string(line) + ": ";
}

}  // namespace

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      break;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' ||
                        s.front() == '\r' || s.front() == '\n')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' ||
                        s.back() == '\r' || s.back() == '\n')) {
    s.remove_suffix(1);
  }
  return s;
}

int parse_int(std::string_view s, std::size_t line, std::string_view field) {
  s = trim(s);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty()) {
    throw Error(ErrorCode::Parse,
                at_line(line) + "expected integer for '" + std::string(field) +
                    "', got '" + std::string(s) + "'",
                std::string(field));
  }
  return v;
}

double parse_double(std::string_view s, std::size_t line,
                    std::string_view field) {
  s = trim(s);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty() ||
      !std::isfinite(v)) {
    throw Error(ErrorCode::Parse,
                at_line(line) + "expected number for '" + std::string(field) +
                    "', got '" + std::string(s) + "'",
                std::string(field));
  }
  return v;
}

Table parse_table(std::string_view text, std::string_view magic,
                  int max_version, const std::vector<std::string>& wanted) {
  Table table;
  bool have_version = false;
  bool have_header = false;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (!have_version) {
      if (trim(line).empty()) {
        if (pos > text.size()) break;
        continue;
      }
      const auto parts = split(trim(line), ' ');
      if (parts.size() != 3 || parts[0] != "#" || parts[1] != magic) {
        throw Error(ErrorCode::Parse,
                    at_line(line_no) + "expected header '# " +
                        std::string(magic) + " <version>'",
                    "header");
      }
      table.version = parse_int(parts[2], line_no, "version");
      if (table.version < 1 || table.version > max_version) {
        throw Error(ErrorCode::Parse,
                    at_line(line_no) + "unsupported " + std::string(magic) +
                        " version " + std::to_string(table.version),
                    "version");
      }
      have_version = true;
      if (pos > text.size()) break;
      continue;
    }
    if (trim(line).empty() || line.front() == '#') {
      if (pos > text.size()) break;
      continue;
    }
    const auto fields = split(line, '\t');
    if (!have_header) {
      for (auto f : fields) table.columns.emplace_back(trim(f));
      table.column_index.assign(wanted.size(), -1);
      for (std::size_t c = 0; c < table.columns.size(); ++c) {
        bool known = false;
        for (std::size_t w = 0; w < wanted.size(); ++w) {
          if (table.columns[c] == wanted[w]) {
            table.column_index[w] = static_cast<int>(c);
            known = true;
          }
        }
        if (!known) table.unknown_columns.push_back(table.columns[c]);
      }
      for (std::size_t w = 0; w < wanted.size(); ++w) {
        if (table.column_index[w] < 0) {
          throw Error(ErrorCode::Parse,
                      at_line(line_no) + "missing column '" + wanted[w] + "'",
                      wanted[w]);
        }
      }
      have_header = true;
      if (pos > text.size()) break;
      continue;
    }
    if (fields.size() != table.columns.size()) {
      throw Error(ErrorCode::Parse,
                  at_line(line_no) + "expected " +
                      std::to_string(table.columns.size()) + " fields, got " +
                      std::to_string(fields.size()),
                  "record");
    }
    TableRow row;
    row.line = line_no;
    row.fields.reserve(wanted.size());
    for (int idx : table.column_index) row.fields.push_back(trim(fields[idx]));
    table.rows.push_back(std::move(row));
    if (pos > text.size()) break;
  }
  if (!have_version) {
    throw Error(ErrorCode::Parse,
                "missing '# " + std::string(magic) + " <version>' header",
                "header");
  }
  if (!have_header) {
    throw Error(ErrorCode::Parse, "missing column header row", "header");
  }
  return table;
}

}  // namespace catpaw::detail
