#pragma once

#include <cmath>
#include <optional>
#include <regex>
#include <string>
#include <string_view>

#include "vlshot/core/error.hpp"
#include "vlshot/core/text.hpp"

namespace vlshot {

/// Literal answer placeholder. Never a tokenizer mask token.
inline constexpr std::string_view kMask = "[mask]";

enum class TemplateSource { demo, parsing };

inline std::string_view to_string(TemplateSource s) { return s == TemplateSource::demo ? "demo" : "parsing"; }

struct MaskedTemplate {
  std::string text;
  TemplateSource source = TemplateSource::parsing;
  std::optional<double> confidence;  // demo source only
  std::string question_type;
};

struct YesNoPromptPair {
  std::string positive;
  std::string negative;
};

inline bool has_single_mask(std::string_view s) { return text::count_occurrences(s, kMask) == 1; }

/// Strips model sentinels (<extra_id_N>, </s>, <pad>) and tidies spacing.
inline std::string strip_model_tokens(std::string_view s) {
  static const std::regex sentinel(R"(<extra_id_\d+>|</s>|<pad>|<unk>)");
  return text::tidy_punctuation(std::regex_replace(std::string(s), sentinel, " "));
}

inline void validate(const MaskedTemplate& t) {
  require(!text::trim(t.text).empty(), ErrorCode::contract, "masked template is empty");
  require(has_single_mask(t.text), ErrorCode::contract, "masked template must contain exactly one [mask]: '" + t.text + "'");
  if (t.confidence) require(std::isfinite(*t.confidence), ErrorCode::contract, "template confidence is not finite");
}

inline void validate(const YesNoPromptPair& p) {
  require(!text::trim(p.positive).empty() && !text::trim(p.negative).empty(), ErrorCode::contract,
          "yes/no prompt pair has an empty side");
  require(text::count_occurrences(p.positive, kMask) == 0 && text::count_occurrences(p.negative, kMask) == 0,
          ErrorCode::contract, "yes/no prompts must not contain [mask]");
}

}  // namespace vlshot
