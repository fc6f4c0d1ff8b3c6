#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vlshot/core/error.hpp"

namespace vlshot {

enum class AnswerType { yes_no, number, other };

inline constexpr std::array<AnswerType, 3> kAnswerTypes = {AnswerType::yes_no, AnswerType::number,
                                                           AnswerType::other};

inline std::string_view to_string(AnswerType t) {
  switch (t) {
    case AnswerType::yes_no: return "yes/no";
    case AnswerType::number: return "number";
    case AnswerType::other: return "other";
  }
  return "other";
}

inline AnswerType parse_answer_type(std::string_view s) {
  if (s == "yes/no") return AnswerType::yes_no;
  if (s == "number") return AnswerType::number;
  if (s == "other") return AnswerType::other;
  fail(ErrorCode::invalid_input, "unknown answer type '" + std::string(s) + "'");
}

inline std::size_t index_of(AnswerType t) { return static_cast<std::size_t>(t); }

struct VqaExample {
  std::string question_id;
  std::string image_ref;
  std::string question;
  std::string question_type;
  AnswerType answer_type = AnswerType::other;
  std::vector<std::string> human_answers;  // exactly 10
  std::string majority_answer;
};

enum class EntailmentLabel { entailment, neutral, contradiction };

inline constexpr std::array<EntailmentLabel, 3> kEntailmentLabels = {
    EntailmentLabel::entailment, EntailmentLabel::neutral, EntailmentLabel::contradiction};

inline std::string_view to_string(EntailmentLabel l) {
  switch (l) {
    case EntailmentLabel::entailment: return "entailment";
    case EntailmentLabel::neutral: return "neutral";
    case EntailmentLabel::contradiction: return "contradiction";
  }
  return "neutral";
}

inline std::optional<EntailmentLabel> parse_entailment_label(std::string_view s) {
  if (s == "entailment") return EntailmentLabel::entailment;
  if (s == "neutral") return EntailmentLabel::neutral;
  if (s == "contradiction") return EntailmentLabel::contradiction;
  return std::nullopt;
}

struct VeExample {
  std::string pair_id;
  std::string premise_image_ref;
  std::string premise_caption;
  std::string hypothesis;
  EntailmentLabel label = EntailmentLabel::neutral;
};

/// (question_type, answer_type): one of the 195 few-shot classes.
struct Way {
  std::string question_type;
  AnswerType answer_type = AnswerType::other;

  auto operator<=>(const Way&) const = default;
};

inline std::string to_string(const Way& w) {
  return w.question_type + " | " + std::string(to_string(w.answer_type));
}

}  // namespace vlshot
