#pragma once

#include <string>
#include <string_view>
#include <unordered_map>

#include "vlshot/core/text.hpp"

namespace vlshot::morph {

namespace detail {

inline bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

inline const std::unordered_map<std::string, std::string>& irregular_past() {
  static const std::unordered_map<std::string, std::string> m = {
      {"be", "was"},     {"have", "had"},   {"do", "did"},     {"go", "went"},     {"eat", "ate"},
      {"see", "saw"},    {"make", "made"},  {"take", "took"},  {"hold", "held"},   {"wear", "wore"},
      {"ride", "rode"},  {"sit", "sat"},    {"stand", "stood"}, {"fall", "fell"},  {"run", "ran"},
      {"get", "got"},    {"give", "gave"},  {"come", "came"},  {"drive", "drove"}, {"fly", "flew"},
      {"throw", "threw"}, {"catch", "caught"}, {"bring", "brought"}, {"buy", "bought"}, {"leave", "left"},
      {"put", "put"},    {"cut", "cut"},    {"hit", "hit"},    {"set", "set"},     {"say", "said"},
      {"write", "wrote"}, {"break", "broke"}, {"grow", "grew"}, {"lie", "lay"},     {"swim", "swam"},
      {"sleep", "slept"}, {"build", "built"}, {"find", "found"}, {"lose", "lost"},  {"win", "won"},
  };
  return m;
}

}  // namespace detail

/// Present-tense third-person singular ("have" -> "has", "watch" -> "watches").
inline std::string third_person_singular(std::string_view lemma) {
  const auto v = text::lower(lemma);
  if (v == "be") return "is";
  if (v == "have") return "has";
  if (v == "do") return "does";
  if (v == "go") return "goes";
  if (v.empty()) return v;
  if (text::ends_with(v, "s") || text::ends_with(v, "x") || text::ends_with(v, "z") || text::ends_with(v, "ch") ||
      text::ends_with(v, "sh") || text::ends_with(v, "o"))
    return v + "es";
  if (v.size() >= 2 && v.back() == 'y' && !detail::is_vowel(v[v.size() - 2])) return v.substr(0, v.size() - 1) + "ies";
  return v + "s";
}

inline std::string past_tense(std::string_view lemma) {
  const auto v = text::lower(lemma);
  if (auto it = detail::irregular_past().find(v); it != detail::irregular_past().end()) return it->second;
  if (v.empty()) return v;
  if (v.back() == 'e') return v + "d";
  if (v.size() >= 2 && v.back() == 'y' && !detail::is_vowel(v[v.size() - 2])) return v.substr(0, v.size() - 1) + "ied";
  return v + "ed";
}

/// Finite form selected by a do-support auxiliary: does -> 3sg, did -> past,
/// do -> base.
inline std::string inflect_like_do(std::string_view do_form, std::string_view lemma) {
  const auto d = text::lower(do_form);
  if (d == "does") return third_person_singular(lemma);
  if (d == "did") return past_tense(lemma);
  return text::lower(lemma);
}

}  // namespace vlshot::morph
