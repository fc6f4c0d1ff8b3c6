#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace vlshot::text {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

inline std::string collapse_ws(std::string_view s) { return join(split_ws(s)); }

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

inline bool ends_with(std::string_view s, std::string_view suffix) {
  return s.size() >= suffix.size() && s.substr(s.size() - suffix.size()) == suffix;
}

inline std::size_t count_occurrences(std::string_view s, std::string_view needle) {
  if (needle.empty()) return 0;
  std::size_t n = 0;
  for (auto pos = s.find(needle); pos != std::string_view::npos; pos = s.find(needle, pos + needle.size())) ++n;
  return n;
}

inline std::string replace_first(std::string_view s, std::string_view needle, std::string_view with) {
  std::string out(s);
  if (auto pos = out.find(needle); pos != std::string::npos) out.replace(pos, needle.size(), with);
  return out;
}

inline std::string capitalize_first(std::string s) {
  for (auto& c : s) {
    if (std::isalpha(static_cast<unsigned char>(c))) {
      c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
      break;
    }
    if (c == '[') break;  // a leading placeholder stays as-is
  }
  return s;
}

/// Removes spaces before , . ; : ? ! and 's, and collapses whitespace.
inline std::string tidy_punctuation(std::string_view s) {
  std::string in = collapse_ws(s);
  std::string out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == ' ' && i + 1 < in.size()) {
      const char n = in[i + 1];
      const bool clitic = n == '\'' && i + 2 < in.size() &&
                          (in[i + 2] == 's' || in[i + 2] == 't') &&
                          (i + 3 == in.size() || in[i + 3] == ' ');
      if (n == ',' || n == '.' || n == ';' || n == ':' || n == '?' || n == '!' || clitic) continue;
    }
    out.push_back(in[i]);
  }
  return out;
}

}  // namespace vlshot::text
