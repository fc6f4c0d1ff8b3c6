#pragma once

#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/dataset/normalize.hpp"
#include "vlshot/dataset/types.hpp"
#include "vlshot/filter/types.hpp"

namespace vlshot {

/// min(matches / 3, 1) after normalizing both sides.
inline double vqa_score(const std::string& prediction, std::span<const std::string> human_answers) {
  require(human_answers.size() == 10, ErrorCode::contract,
          "vqa_score: expected 10 human answers, got " + std::to_string(human_answers.size()));
  const auto p = normalize_answer(prediction);
  int matches = 0;
  for (const auto& a : human_answers)
    if (normalize_answer(a) == p) ++matches;
  return std::min(static_cast<double>(matches) / 3.0, 1.0);
}

struct VqaResult {
  std::string question_id;
  std::string prediction;
  double score = 0.0;
  AnswerType answer_type = AnswerType::other;
};

struct Breakdown {
  double yes_no = 0.0;
  double number = 0.0;
  double other = 0.0;
  double all = 0.0;
  std::array<std::size_t, 3> counts{};  // questions per answer type
  std::size_t total = 0;
};

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

/// Category means and the overall mean over questions, x100, two decimals.
/// An empty category reports 0.
inline Breakdown aggregate(std::span<const VqaResult> results, bool rounded = true) {
  require(!results.empty(), ErrorCode::contract, "aggregate: no results");
  std::array<double, 3> sums{};
  Breakdown b;
  double total = 0.0;
  for (const auto& r : results) {
    const auto t = index_of(r.answer_type);
    sums[t] += r.score;
    ++b.counts[t];
    total += r.score;
  }
  b.total = results.size();
  auto mean = [&](std::size_t t) { return b.counts[t] ? 100.0 * sums[t] / double(b.counts[t]) : 0.0; };
  b.yes_no = mean(0);
  b.number = mean(1);
  b.other = mean(2);
  b.all = 100.0 * total / double(results.size());
  if (rounded) {
    b.yes_no = round2(b.yes_no);
    b.number = round2(b.number);
    b.other = round2(b.other);
    b.all = round2(b.all);
  }
  return b;
}

inline double entailment_accuracy(std::span<const EntailmentLabel> predictions, std::span<const EntailmentLabel> golds) {
  require(predictions.size() == golds.size(), ErrorCode::contract,
          "entailment_accuracy: " + std::to_string(predictions.size()) + " predictions for " +
              std::to_string(golds.size()) + " gold labels");
  if (golds.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < golds.size(); ++i) hit += predictions[i] == golds[i];
  return static_cast<double>(hit) / static_cast<double>(golds.size());
}

/// "question: {q} answer: {a}" for every answer.
inline PromptSet build_qip_prompts(const std::string& question, std::span<const std::string> answers) {
  require(!answers.empty(), ErrorCode::contract, "build_qip_prompts: no answers");
  PromptSet set;
  set.source = MaskedTemplate{"question: " + question + " answer: [mask]", TemplateSource::parsing, std::nullopt, {}};
  set.entries.reserve(answers.size());
  for (const auto& a : answers) set.entries.push_back({a, "question: " + question + " answer: " + a});
  return set;
}

}  // namespace vlshot
