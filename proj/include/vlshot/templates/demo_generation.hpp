#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/core/text.hpp"
#include "vlshot/templates/demonstrations.hpp"
#include "vlshot/templates/infill_lm.hpp"
#include "vlshot/templates/types.hpp"

namespace vlshot {

/// Decoding budget for template generation: 20 beams, 10 returned, spans up
/// to 30 tokens.
inline GenerationOptions template_generation_options() { return GenerationOptions{20, 10, 30}; }

inline std::string terminate_sentence(std::string s) {
  s = text::trim(s);
  if (!s.empty() && s.back() != '.' && s.back() != '?' && s.back() != '!') s.push_back('.');
  return s;
}

/// "Q1 S1. Q2 S2. ... Q <sentinel>"
inline std::string build_infill_request(const std::string& question, std::span<const Demonstration> demos,
                                        const std::string& sentinel = "<extra_id_0>") {
  require(!demos.empty(), ErrorCode::invalid_input, "build_infill_request: at least one demonstration is required");
  std::string out;
  for (const auto& d : demos) {
    out += text::trim(d.question);
    out += ' ';
    out += terminate_sentence(d.statement);
    out += ' ';
  }
  out += text::trim(question);
  out += ' ';
  out += sentinel;
  return out;
}

/// Best generated span containing exactly one [mask]; confidence is its mean
/// per-token log-probability.
inline MaskedTemplate generate_template_demo(InfillLm& lm, const std::string& question,
                                             std::span<const Demonstration> demos,
                                             const std::string& question_type = {},
                                             const GenerationOptions& opts = template_generation_options()) {
  const auto request = build_infill_request(question, demos, lm.sentinel());
  const auto spans = lm.generate(request, opts);
  std::optional<MaskedTemplate> best;
  for (const auto& span : spans) {
    auto cleaned = strip_model_tokens(span.text);
    if (cleaned.empty() || !has_single_mask(cleaned)) continue;
    const double conf = span.mean_log_prob();
    if (!std::isfinite(conf)) continue;
    if (!best || conf > *best->confidence)
      best = MaskedTemplate{std::move(cleaned), TemplateSource::demo, conf, question_type};
  }
  if (!best)
    fail(ErrorCode::generation_failure, "no generated span with exactly one [mask] for '" + question + "'");
  return *best;
}

namespace detail {

inline std::optional<std::string> best_statement(InfillLm& lm, const std::string& question,
                                                 std::span<const Demonstration> demos, const GenerationOptions& opts) {
  if (demos.empty()) return std::nullopt;
  const auto spans = lm.generate(build_infill_request(question, demos, lm.sentinel()), opts);
  std::optional<std::string> best;
  double best_conf = 0.0;
  for (const auto& span : spans) {
    auto cleaned = strip_model_tokens(span.text);
    while (!cleaned.empty() && (cleaned.back() == '.' || cleaned.back() == ' ')) cleaned.pop_back();
    if (cleaned.empty() || text::count_occurrences(cleaned, kMask) != 0) continue;
    const double conf = span.mean_log_prob();
    if (!best || conf > best_conf) {
      best = std::move(cleaned);
      best_conf = conf;
    }
  }
  return best;
}

}  // namespace detail

/// Two passes (affirming demos, negating demos) producing the yes and no
/// prompts of a yes/no question.
inline YesNoPromptPair generate_yesno_prompts(InfillLm& lm, const std::string& question,
                                              std::span<const Demonstration> positive_demos,
                                              std::span<const Demonstration> negative_demos,
                                              const GenerationOptions& opts = template_generation_options()) {
  auto pos = detail::best_statement(lm, question, positive_demos, opts);
  auto neg = detail::best_statement(lm, question, negative_demos, opts);
  if (!pos || !neg)
    fail(ErrorCode::yesno_generation,
         std::string("yes/no generation failed for '") + question + "' (" + (pos ? "negative" : "positive") + " pass)");
  YesNoPromptPair pair{*pos, *neg};
  validate(pair);
  return pair;
}

}  // namespace vlshot
