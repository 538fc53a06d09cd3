#pragma once

// Minimal comma-separated text helpers. Fields never contain commas or
// quotes in any of the formats this library reads or writes.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "lobrelax/error.hpp"

namespace lobrelax::csv {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

/// Shortest representation that parses back to the same double.
inline std::string format(double v) {
  if (std::isnan(v)) return "";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class Int>
std::string format_int(Int v) {
  return std::to_string(v);
}

template <class T>
T parse_number(std::string_view field, std::string_view what) {
  T value{};
  const char* first = field.data();
  const char* last = field.data() + field.size();
  if (!field.empty() && field.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty())
    throw DataError("cannot parse " + std::string(what) + " from '" + std::string(field) + "'");
  return value;
}

inline double parse_double(std::string_view field, std::string_view what) { return parse_number<double>(field, what); }

inline std::optional<double> parse_optional_double(std::string_view field, std::string_view what) {
  if (field.empty()) return std::nullopt;
  return parse_double(field, what);
}

/// Reads non-empty lines; the first one is returned separately as the header.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw DataError("missing column '" + std::string(name) + "'");
  }
};

inline Table read_table(std::istream& in) {
  Table t;
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split(line);
    std::vector<std::string> owned(fields.begin(), fields.end());
    if (!have_header) {
      t.header = std::move(owned);
      have_header = true;
      continue;
    }
    if (owned.size() != t.header.size())
      throw DataError("line " + std::to_string(lineno) + ": expected " + std::to_string(t.header.size()) + " fields, got " +
                      std::to_string(owned.size()));
    t.rows.push_back(std::move(owned));
    t.line_numbers.push_back(lineno);
  }
  return t;
}

inline void expect_header(const Table& t, const std::vector<std::string_view>& names) {
  if (t.header.size() != names.size()) throw DataError("unexpected header width");
  for (std::size_t i = 0; i < names.size(); ++i)
    if (t.header[i] != names[i]) throw DataError("unexpected header column '" + t.header[i] + "', wanted '" + std::string(names[i]) + "'");
}

}  // namespace lobrelax::csv
