#pragma once

// Minimal comma-separated reader/writer helpers. Fields never contain
// quotes or embedded commas in the formats this library reads and writes.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "micmix/error.hpp"

namespace micmix::csv
{

inline std::string_view trim(std::string_view s)
{
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos)
    return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(std::string_view line, char sep = ',')
{
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;)
  {
    const auto pos = line.find(sep, start);
    out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos)
      break;
    start = pos + 1;
  }
  return out;
}

inline bool parse_double(std::string_view s, double &out)
{
  s = trim(s);
  if (s.empty())
    return false;
  // from_chars rejects a leading '+'.
  if (s.front() == '+')
    s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline bool parse_int(std::string_view s, long long &out)
{
  s = trim(s);
  if (s.empty())
    return false;
  if (s.front() == '+')
    s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

inline double require_double(std::string_view s, std::size_t line, const char *what)
{
  double v;
  if (!parse_double(s, v))
    throw ParseError(std::string("expected a number for ") + what + ", got '" + std::string(s) + "'",
                     line);
  return v;
}

inline long long require_int(std::string_view s, std::size_t line, const char *what)
{
  long long v;
  if (!parse_int(s, v))
    throw ParseError(std::string("expected an integer for ") + what + ", got '" + std::string(s) +
                         "'",
                     line);
  return v;
}

// Shortest representation that round-trips exactly.
inline std::string format_double(double v)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline std::string format_fixed(double v, int decimals)
{
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

template <class Range>
std::string join(const Range &values, char sep = ';')
{
  std::string out;
  bool first = true;
  for (const auto &v : values)
  {
    if (!first)
      out.push_back(sep);
    first = false;
    if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
      out += format_double(v);
    else
      out += std::to_string(v);
  }
  return out;
}

inline std::vector<double> split_doubles(std::string_view field, std::size_t line, char sep = ';')
{
  std::vector<double> out;
  if (trim(field).empty())
    return out;
  for (const auto &part : split(field, sep))
    out.push_back(require_double(part, line, "list entry"));
  return out;
}

// Reads non-empty, non-comment lines together with their 1-based line numbers.
struct Line
{
  std::size_t number;
  std::string text;
};

inline std::vector<Line> read_lines(const std::string &path)
{
  std::ifstream in(path);
  if (!in)
    throw ValidationError("cannot open file: " + path);
  std::vector<Line> out;
  std::string text;
  std::size_t number = 0;
  while (std::getline(in, text))
  {
    ++number;
    const auto t = trim(text);
    if (t.empty() || t.front() == '#')
      continue;
    out.push_back({number, std::string(t)});
  }
  return out;
}

inline void write_file(const std::string &path, const std::string &contents)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out)
    throw ValidationError("cannot write file: " + path);
  out << contents;
  if (!out)
    throw ValidationError("write failed: " + path);
}

} // namespace micmix::csv
