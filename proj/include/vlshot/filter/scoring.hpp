#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/core/text.hpp"
#include "vlshot/dataset/vocabulary.hpp"
#include "vlshot/filter/types.hpp"
#include "vlshot/templates/infill_lm.hpp"
#include "vlshot/templates/types.hpp"

namespace vlshot {

struct ScoringOptions {
  std::size_t batch_size = 128;
  std::size_t max_span_tokens = 6;
  std::size_t max_demonstrations = 16;
  bool generative = false;  // harvest candidates from beam output instead of exhaustive scoring
  std::size_t num_beams = 200;
  std::size_t num_return = 200;
};

/// Template text with the answer slot replaced by the LM sentinel.
inline std::string infill_context(const MaskedTemplate& tmpl, const std::string& sentinel) {
  validate(tmpl);
  return text::replace_first(tmpl.text, kMask, sentinel);
}

namespace detail {

inline std::vector<CandidateScore> score_in_context(InfillLm& lm, const std::string& context,
                                                    const AnswerVocabulary& vocab, const ScoringOptions& opts) {
  require(!vocab.empty(), ErrorCode::contract, "score_answers: empty vocabulary");
  require(opts.batch_size > 0, ErrorCode::configuration, "score_answers: batch size must be positive");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<CandidateScore> out(vocab.size());
  std::vector<std::string> batch;
  std::vector<std::size_t> batch_index;
  auto flush = [&] {
    if (batch.empty()) return;
    const auto scores = lm.score_spans(context, batch);
    require(scores.size() == batch.size(), ErrorCode::adapter,
            lm.name() + ": returned " + std::to_string(scores.size()) + " scores for " +
                std::to_string(batch.size()) + " spans");
    for (std::size_t j = 0; j < scores.size(); ++j) {
      require(!std::isnan(scores[j]), ErrorCode::adapter,
              lm.name() + ": NaN score for answer '" + batch[j] + "'");
      out[batch_index[j]].log_prob = scores[j];
    }
    batch.clear();
    batch_index.clear();
  };
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    out[i].answer = vocab[i];
    out[i].index = i;
    if (lm.count_tokens(vocab[i]) > opts.max_span_tokens) {
      out[i].log_prob = kNegInf;
      continue;
    }
    batch.push_back(vocab[i]);
    batch_index.push_back(i);
    if (batch.size() == opts.batch_size) flush();
  }
  flush();
  return out;
}

/// Beam-harvested candidates: spans that normalize onto a vocabulary entry
/// keep their best total log-probability; everything else is -inf.
inline std::vector<CandidateScore> harvest_in_context(InfillLm& lm, const std::string& context,
                                                      const AnswerVocabulary& vocab, const ScoringOptions& opts) {
  require(!vocab.empty(), ErrorCode::contract, "score_answers: empty vocabulary");
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  std::vector<CandidateScore> out(vocab.size());
  for (std::size_t i = 0; i < vocab.size(); ++i) out[i] = CandidateScore{vocab[i], i, kNegInf};
  const auto spans = lm.generate(context, GenerationOptions{opts.num_beams, opts.num_return, opts.max_span_tokens});
  for (const auto& span : spans) {
    const auto cleaned = text::trim(strip_model_tokens(span.text));
    if (cleaned.empty()) continue;
    const auto idx = vocab.find(cleaned);
    if (!idx) continue;
    const double lp = span.total_log_prob();
    if (lp > out[*idx].log_prob) out[*idx].log_prob = lp;
  }
  return out;
}

inline std::vector<CandidateScore> score_context(InfillLm& lm, const std::string& context,
                                                 const AnswerVocabulary& vocab, const ScoringOptions& opts) {
  return opts.generative ? harvest_in_context(lm, context, vocab, opts) : score_in_context(lm, context, vocab, opts);
}

}  // namespace detail

/// One infill log-likelihood per vocabulary answer, in vocabulary order.
/// Answers longer than the span budget score -inf.
inline std::vector<CandidateScore> score_answers(InfillLm& lm, const MaskedTemplate& tmpl,
                                                 const AnswerVocabulary& vocab, const ScoringOptions& opts = {}) {
  return detail::score_context(lm, infill_context(tmpl, lm.sentinel()), vocab, opts);
}

/// Highest k finite scores, descending; equal scores keep vocabulary order.
inline FilteredAnswerSet filter_top_k(std::span<const CandidateScore> scores, std::size_t k,
                                      FilterMode mode = FilterMode::plain) {
  require(k >= 1, ErrorCode::invalid_input, "filter_top_k: k must be at least 1");
  std::vector<CandidateScore> pool;
  pool.reserve(scores.size());
  for (const auto& s : scores)
    if (std::isfinite(s.log_prob)) pool.push_back(s);
  const auto n = std::min(k, pool.size());
  auto before = [](const CandidateScore& a, const CandidateScore& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return a.index < b.index;
  };
  std::partial_sort(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(n), pool.end(), before);
  pool.resize(n);
  return FilteredAnswerSet{std::move(pool), k, mode, {}};
}

/// Demonstration context: the filled statements, in order, ahead of the
/// template. At most opts.max_demonstrations are used.
inline std::string demonstration_context(std::span<const std::string> filled_demos, const MaskedTemplate& tmpl,
                                         const std::string& sentinel, std::size_t max_demos) {
  std::string ctx;
  const auto n = std::min(filled_demos.size(), max_demos);
  for (std::size_t i = 0; i < n; ++i) {
    auto d = text::trim(filled_demos[i]);
    require(text::count_occurrences(d, kMask) == 0, ErrorCode::invalid_input,
            "filled demonstration still contains [mask]: " + d);
    if (d.empty()) continue;
    if (d.back() != '.' && d.back() != '?' && d.back() != '!') d.push_back('.');
    ctx += d;
    ctx += ' ';
  }
  return ctx + infill_context(tmpl, sentinel);
}

inline FilteredAnswerSet filter_with_demos(InfillLm& lm, const MaskedTemplate& tmpl,
                                           std::span<const std::string> filled_demos,
                                           const AnswerVocabulary& vocab, std::size_t k,
                                           const ScoringOptions& opts = {}) {
  if (filled_demos.empty()) {
    auto set = filter_top_k(score_answers(lm, tmpl, vocab, opts), k, FilterMode::plain);
    set.warnings.push_back("no demonstrations available for '" + tmpl.text + "'; used plain filtering");
    return set;
  }
  const auto ctx = demonstration_context(filled_demos, tmpl, lm.sentinel(), opts.max_demonstrations);
  auto set = filter_top_k(detail::score_context(lm, ctx, vocab, opts), k, FilterMode::demonstrated);
  if (filled_demos.size() > opts.max_demonstrations)
    set.warnings.push_back(std::to_string(filled_demos.size()) + " demonstrations supplied; used the first " +
                           std::to_string(opts.max_demonstrations));
  return set;
}

}  // namespace vlshot
