#pragma once

#include <cctype>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/core/text.hpp"

namespace vlshot {

inline constexpr std::string_view kFallbackQuestionType = "none of the above";

/// The VQAv2 question-type list. The designated fallback entry is part of the
/// list (it is a way like any other) but never matches as a prefix.
class QuestionTaxonomy {
 public:
  QuestionTaxonomy() = default;

  explicit QuestionTaxonomy(std::vector<std::string> types, std::string fallback = std::string(kFallbackQuestionType))
      : fallback_(std::move(fallback)) {
    for (auto& t : types) {
      auto norm = text::collapse_ws(text::lower(t));
      if (norm.empty()) continue;
      for (const auto& seen : types_)
        require(seen != norm, ErrorCode::invalid_input, "duplicate question type '" + norm + "'");
      types_.push_back(std::move(norm));
    }
    bool has_fallback = false;
    for (const auto& t : types_) has_fallback |= t == fallback_;
    if (!has_fallback) types_.push_back(fallback_);
  }

  static QuestionTaxonomy load(const std::filesystem::path& file) {
    std::ifstream in(file);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open taxonomy file " + file.string());
    std::vector<std::string> types;
    for (std::string line; std::getline(in, line);) {
      auto t = text::trim(line);
      if (!t.empty() && t[0] != '#') types.push_back(t);
    }
    return QuestionTaxonomy(std::move(types));
  }

  const std::vector<std::string>& types() const { return types_; }
  const std::string& fallback() const { return fallback_; }
  std::size_t size() const { return types_.size(); }

  bool contains(std::string_view type) const {
    for (const auto& t : types_)
      if (t == type) return true;
    return false;
  }

  /// Longest taxonomy prefix of the question, matched case-insensitively on
  /// word boundaries; the fallback type when nothing matches.
  std::string classify(std::string_view question) const {
    const auto q = text::collapse_ws(text::lower(question));
    require(!q.empty(), ErrorCode::invalid_input, "classify_question_type: empty question");
    const std::string* best = nullptr;
    for (const auto& t : types_) {
      if (t == fallback_ || !text::starts_with(q, t)) continue;
      if (q.size() > t.size()) {
        const char next = q[t.size()];
        if (std::isalnum(static_cast<unsigned char>(next)) || next == '\'') continue;
      }
      if (best == nullptr || t.size() > best->size()) best = &t;
    }
    return best ? *best : fallback_;
  }

 private:
  std::vector<std::string> types_;
  std::string fallback_ = std::string(kFallbackQuestionType);
};

inline std::string classify_question_type(std::string_view question, const QuestionTaxonomy& taxonomy) {
  return taxonomy.classify(question);
}

}  // namespace vlshot
