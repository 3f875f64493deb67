#pragma once

#include <cctype>
#include <string>
#include <string_view>

namespace dci::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return out;
}

/// Collapses every run of whitespace into a single space.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool pending_space = false;
  for (char c : s) {
    if (is_space(c)) {
      pending_space = !out.empty();
    } else {
      if (pending_space) out.push_back(' ');
      pending_space = false;
      out.push_back(c);
    }
  }
  return out;
}

inline std::string_view strip_trailing_punctuation(std::string_view s) {
  constexpr std::string_view kPunct = ".,!?;:";
  while (!s.empty() && kPunct.find(s.back()) != std::string_view::npos) {
    s.remove_suffix(1);
  }
  return s;
}

/// trim + lowercase + collapse whitespace + strip trailing punctuation.
inline std::string normalize_for_match(std::string_view s) {
  std::string collapsed = collapse_whitespace(trim(s));
  std::string_view stripped = strip_trailing_punctuation(collapsed);
  stripped = trim(stripped);
  return to_lower_ascii(stripped);
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

}  // namespace dci::text
