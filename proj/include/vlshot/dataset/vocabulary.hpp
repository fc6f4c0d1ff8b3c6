#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"
#include "vlshot/core/text.hpp"
#include "vlshot/dataset/normalize.hpp"

namespace vlshot {

/// Ordered answer list; position is the class index.
class AnswerVocabulary {
 public:
  AnswerVocabulary() = default;

  explicit AnswerVocabulary(std::vector<std::string> answers) : answers_(std::move(answers)) {
    index_.reserve(answers_.size());
    for (std::size_t i = 0; i < answers_.size(); ++i) {
      auto key = normalize_answer(answers_[i]);
      auto [it, inserted] = index_.emplace(key, i);
      require(inserted, ErrorCode::invalid_input,
              "answer vocabulary: '" + answers_[i] + "' duplicates entry " + std::to_string(it->second) +
                  " after normalization");
    }
  }

  static AnswerVocabulary load(const std::filesystem::path& file) {
    std::ifstream in(file);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open vocabulary file " + file.string());
    std::vector<std::string> answers;
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) answers.push_back(line);
    }
    return AnswerVocabulary(std::move(answers));
  }

  std::size_t size() const { return answers_.size(); }
  bool empty() const { return answers_.empty(); }
  const std::string& operator[](std::size_t i) const { return answers_[i]; }
  const std::vector<std::string>& answers() const { return answers_; }

  std::optional<std::size_t> find(std::string_view answer) const {
    auto it = index_.find(normalize_answer(answer));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  std::uint64_t content_hash() const {
    Fnv1a h;
    h.u64(answers_.size());
    for (const auto& a : answers_) h.str(a);
    return h.value();
  }

 private:
  std::vector<std::string> answers_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace vlshot
