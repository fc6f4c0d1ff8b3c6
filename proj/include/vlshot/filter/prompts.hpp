#pragma once

#include <string>
#include <string_view>

#include "vlshot/core/error.hpp"
#include "vlshot/core/text.hpp"
#include "vlshot/filter/types.hpp"
#include "vlshot/templates/types.hpp"

namespace vlshot {

inline std::string fill_template(const MaskedTemplate& tmpl, std::string_view answer) {
  validate(tmpl);
  auto filled = text::tidy_punctuation(text::collapse_ws(text::replace_first(tmpl.text, kMask, answer)));
  const bool only_punct = filled.find_first_not_of(" .,;:?!'\"") == std::string::npos;
  require(!only_punct, ErrorCode::assembly,
          "filling '" + tmpl.text + "' with '" + std::string(answer) + "' produced an empty prompt");
  return filled;
}

inline PromptSet assemble_prompts(const MaskedTemplate& tmpl, const FilteredAnswerSet& answers) {
  PromptSet set;
  set.source = tmpl;
  set.entries.reserve(answers.answers.size());
  for (const auto& a : answers.answers) set.entries.push_back({a.answer, fill_template(tmpl, a.answer)});
  return set;
}

/// Yes/no prompts pass through; the positive side answers "yes".
inline PromptSet assemble_prompts(const YesNoPromptPair& pair) {
  validate(pair);
  PromptSet set;
  set.source = pair;
  set.entries = {{"yes", text::trim(pair.positive)}, {"no", text::trim(pair.negative)}};
  return set;
}

}  // namespace vlshot
