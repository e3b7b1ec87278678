#pragma once

// Line-oriented text helpers shared by the mesh, field and config readers.

#include <charconv>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "hce/errors.hpp"
#include "hce/mesh.hpp"

namespace hce::detail {

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && s[0] == '+') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) throw ParseError(line, "not a number: '" + s + "'");
  return v;
}

inline Index parse_index(const std::string& s, std::size_t line) {
  unsigned long long v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ParseError(line, "not a non-negative integer: '" + s + "'");
  return static_cast<Index>(v);
}

/// Yields whitespace-separated tokens of each non-blank line; '#' starts a comment.
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  std::optional<std::vector<std::string>> next_record() {
    std::string text;
    while (std::getline(in_, text)) {
      ++line_;
      if (const auto hash = text.find('#'); hash != std::string::npos) text.erase(hash);
      std::istringstream ss(text);
      std::vector<std::string> tokens;
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return tokens;
    }
    return std::nullopt;
  }

  std::vector<std::string> expect_record(const std::string& what) {
    auto rec = next_record();
    if (!rec) throw ParseError(line_ + 1, "unexpected end of input, expected " + what);
    return *rec;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

}  // namespace hce::detail
