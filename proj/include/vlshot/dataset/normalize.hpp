#pragma once

#include <array>
#include <cctype>
#include <string>
#include <string_view>
#include <unordered_map>

#include "vlshot/core/text.hpp"

namespace vlshot {

namespace detail {

inline const std::unordered_map<std::string, std::string>& number_words() {
  static const std::unordered_map<std::string, std::string> m = {
      {"none", "0"}, {"zero", "0"}, {"one", "1"},   {"two", "2"},   {"three", "3"}, {"four", "4"},
      {"five", "5"}, {"six", "6"},  {"seven", "7"}, {"eight", "8"}, {"nine", "9"},  {"ten", "10"},
  };
  return m;
}

inline const std::unordered_map<std::string, std::string>& contractions() {
  static const std::unordered_map<std::string, std::string> m = {
      {"aint", "ain't"},     {"arent", "aren't"},   {"cant", "can't"},       {"couldnt", "couldn't"},
      {"didnt", "didn't"},   {"doesnt", "doesn't"}, {"dont", "don't"},       {"hadnt", "hadn't"},
      {"hasnt", "hasn't"},   {"havent", "haven't"}, {"isnt", "isn't"},       {"itd", "it'd"},
      {"itll", "it'll"},     {"lets", "let's"},     {"mightnt", "mightn't"}, {"shouldnt", "shouldn't"},
      {"thats", "that's"},   {"theres", "there's"}, {"theyre", "they're"},   {"wasnt", "wasn't"},
      {"werent", "weren't"}, {"whats", "what's"},   {"wont", "won't"},       {"wouldnt", "wouldn't"},
      {"youre", "you're"},
  };
  return m;
}

inline bool is_stripped_punct(char c) {
  static constexpr std::string_view kPunct = ";/[]\"{}()=+\\_-><@`,?!*#%&^|~:";
  return kPunct.find(c) != std::string_view::npos;
}

}  // namespace detail

/// VQA answer normalization: lowercase, punctuation stripped (apostrophes and
/// decimal points kept), number words to digits, articles dropped, common
/// apostrophe-less contractions restored, whitespace collapsed. Idempotent.
inline std::string normalize_answer(std::string_view raw) {
  const std::string s = text::lower(raw);
  std::string cleaned;
  cleaned.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '.') {
      const bool decimal = i > 0 && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
                           std::isdigit(static_cast<unsigned char>(s[i + 1]));
      if (decimal) cleaned.push_back(c);
      continue;
    }
    if (c == ',' && i > 0 && i + 1 < s.size() && std::isdigit(static_cast<unsigned char>(s[i - 1])) &&
        std::isdigit(static_cast<unsigned char>(s[i + 1]))) {
      continue;  // 1,000 -> 1000
    }
    cleaned.push_back(detail::is_stripped_punct(c) || std::isspace(static_cast<unsigned char>(c)) ? ' ' : c);
  }
  std::string out;
  for (const auto& word : text::split_ws(cleaned)) {
    if (word == "a" || word == "an" || word == "the") continue;
    std::string w = word;
    if (auto it = detail::number_words().find(w); it != detail::number_words().end()) w = it->second;
    if (auto it = detail::contractions().find(w); it != detail::contractions().end()) w = it->second;
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

}  // namespace vlshot
