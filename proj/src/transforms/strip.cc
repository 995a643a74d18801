#include "dsfp/transforms/strip.h"

#include <vector>

namespace dsfp {
namespace {

constexpr std::string_view kBullet = "\xe2\x80\xa2";  // U+2022
constexpr std::string_view kEnDash = "\xe2\x80\x93";  // U+2013

bool is_ascii_digit(char c) { return c >= '0' && c <= '9'; }
bool is_ascii_letter(char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z'); }
bool is_sentence_end(char c) { return c == '.' || c == '!' || c == '?'; }

std::size_t marker_body(std::string_view s) {
  if (s.starts_with(kBullet)) return kBullet.size();
  if (s.starts_with(kEnDash)) return kEnDash.size();
  if (!s.empty() && (s[0] == '-' || s[0] == '*')) return 1;
  std::size_t i = 0;
  while (i < s.size() && is_ascii_digit(s[i])) ++i;
  if (i > 0 && i < s.size() && (s[i] == '.' || s[i] == ')')) return i + 1;
  if (s.size() >= 2 && is_ascii_letter(s[0]) && s[1] == ')') return 2;
  return 0;
}

// Removes every marker at the front of `line` (after leading spaces).
std::string_view drop_markers(std::string_view line) {
  for (;;) {
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    const std::size_t m = list_marker_length(line);
    if (m == 0) return line;
    line.remove_prefix(m);
  }
}

}  // namespace

std::size_t list_marker_length(std::string_view s) {
  const std::size_t n = marker_body(s);
  if (n == 0) return 0;
  if (n == s.size() || s[n] == ' ') return n;
  return 0;
}

std::string strip_formatting(std::string_view text) {
  // Tabs and other horizontal breaks become spaces; lines are cut at \n and \r.
  std::vector<std::string> lines(1);
  for (char c : text) {
    if (c == '\n' || c == '\r') {
      lines.emplace_back();
    } else if (c == '\t' || c == '\f' || c == '\v') {
      lines.back().push_back(' ');
    } else {
      lines.back().push_back(c);
    }
  }

  std::string joined;
  for (const auto& raw : lines) {
    std::string_view rest = drop_markers(raw);
    std::string line;
    while (!rest.empty()) {
      const char c = rest.front();
      line.push_back(c);
      rest.remove_prefix(1);
      if (is_sentence_end(c) && !rest.empty() && rest.front() == ' ') {
        const auto after = drop_markers(rest);
        if (after.size() != rest.size() - 1 || after.empty()) {
          // A marker was removed, or only spaces follow: keep one separator.
          line.push_back(' ');
          rest = after;
        }
      }
    }
    if (line.empty()) continue;
    if (!joined.empty()) joined.push_back(' ');
    joined += line;
  }

  std::string out;
  out.reserve(joined.size());
  for (char c : joined) {
    if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
    out.push_back(c);
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

}  // namespace dsfp
