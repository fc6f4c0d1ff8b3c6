#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/core/error.hpp"
#include "vlshot/core/text.hpp"
#include "vlshot/dataset/taxonomy.hpp"
#include "vlshot/templates/types.hpp"

namespace vlshot {

struct Demonstration {
  std::string question;
  std::string statement;
};

struct DemonstrationSet {
  std::vector<Demonstration> masked;    // statement carries one [mask]
  std::vector<Demonstration> positive;  // yes/no: affirming statement
  std::vector<Demonstration> negative;  // yes/no: negating statement
};

/// Question-to-statement demonstrations keyed by question type.
///
/// File layout (JSON):
///   { "what color is": { "demos": [ {"question": ..., "statement": ...}, ... ] },
///     "does this": { "positive": [...], "negative": [...] } }
class DemonstrationBank {
 public:
  DemonstrationBank() = default;

  void add(const std::string& question_type, DemonstrationSet set) {
    for (const auto& d : set.masked)
      require(has_single_mask(d.statement), ErrorCode::invalid_input,
              "demonstration for '" + question_type + "' must contain exactly one [mask]: " + d.statement);
    for (const auto* list : {&set.positive, &set.negative})
      for (const auto& d : *list)
        require(text::count_occurrences(d.statement, kMask) == 0, ErrorCode::invalid_input,
                "yes/no demonstration for '" + question_type + "' must not contain [mask]: " + d.statement);
    entries_[text::lower(question_type)] = std::move(set);
  }

  static DemonstrationBank from_json(const nlohmann::json& j) {
    DemonstrationBank bank;
    require(j.is_object(), ErrorCode::load, "demonstration bank must be a JSON object");
    auto read = [](const nlohmann::json& arr) {
      std::vector<Demonstration> out;
      for (const auto& d : arr)
        out.push_back(Demonstration{d.at("question").get<std::string>(), d.at("statement").get<std::string>()});
      return out;
    };
    for (const auto& [type, body] : j.items()) {
      DemonstrationSet set;
      try {
        if (body.contains("demos")) set.masked = read(body["demos"]);
        if (body.contains("positive")) set.positive = read(body["positive"]);
        if (body.contains("negative")) set.negative = read(body["negative"]);
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::load, "demonstration bank entry '" + type + "': " + e.what());
      }
      bank.add(type, std::move(set));
    }
    return bank;
  }

  static DemonstrationBank load(const std::filesystem::path& file) {
    std::ifstream in(file);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + file.string());
    try {
      return from_json(nlohmann::json::parse(in));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::load, file.string() + ": " + e.what());
    }
  }

  /// Every key must name a taxonomy type.
  void check_against(const QuestionTaxonomy& taxonomy) const {
    for (const auto& [type, _] : entries_)
      require(taxonomy.contains(type), ErrorCode::invalid_input,
              "demonstration bank key '" + type + "' is not a taxonomy question type");
  }

  /// Demonstrations for a question type. A type without its own entry
  /// borrows from the longest bank key that is a word-prefix of it
  /// ("what color is the" uses "what color is").
  const DemonstrationSet* find(const std::string& question_type) const {
    const auto type = text::lower(question_type);
    if (auto it = entries_.find(type); it != entries_.end()) return &it->second;
    const DemonstrationSet* best = nullptr;
    std::size_t best_len = 0;
    for (const auto& [key, set] : entries_) {
      if (key.size() >= type.size() || !text::starts_with(type, key) || type[key.size()] != ' ') continue;
      if (key.size() > best_len) {
        best = &set;
        best_len = key.size();
      }
    }
    return best;
  }

  const std::map<std::string, DemonstrationSet>& entries() const { return entries_; }

 private:
  std::map<std::string, DemonstrationSet> entries_;
};

}  // namespace vlshot
