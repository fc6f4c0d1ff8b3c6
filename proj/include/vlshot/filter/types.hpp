#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/templates/types.hpp"

namespace vlshot {

struct CandidateScore {
  std::string answer;
  std::size_t index = 0;  // vocabulary position, the tie-break key
  double log_prob = 0.0;
};

enum class FilterMode { plain, demonstrated };

inline std::string_view to_string(FilterMode m) { return m == FilterMode::plain ? "plain" : "demonstrated"; }

inline FilterMode parse_filter_mode(std::string_view s) {
  if (s == "plain") return FilterMode::plain;
  if (s == "demonstrated") return FilterMode::demonstrated;
  fail(ErrorCode::invalid_input, "unknown filter mode '" + std::string(s) + "'");
}

struct FilteredAnswerSet {
  std::vector<CandidateScore> answers;  // descending log_prob
  std::size_t k = 0;
  FilterMode mode = FilterMode::plain;
  std::vector<std::string> warnings;

  std::vector<std::string> texts() const {
    std::vector<std::string> out;
    out.reserve(answers.size());
    for (const auto& a : answers) out.push_back(a.answer);
    return out;
  }
};

struct PromptEntry {
  std::string answer;
  std::string prompt;
};

struct PromptSet {
  std::vector<PromptEntry> entries;
  std::variant<MaskedTemplate, YesNoPromptPair> source;

  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

}  // namespace vlshot
