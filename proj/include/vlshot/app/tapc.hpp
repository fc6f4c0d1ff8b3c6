#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/app/config.hpp"
#include "vlshot/dataset/types.hpp"
#include "vlshot/dataset/vocabulary.hpp"
#include "vlshot/eval/metrics.hpp"
#include "vlshot/filter/cache.hpp"
#include "vlshot/filter/prompts.hpp"
#include "vlshot/filter/scoring.hpp"
#include "vlshot/templates/demo_generation.hpp"
#include "vlshot/templates/demonstrations.hpp"
#include "vlshot/templates/ensemble.hpp"
#include "vlshot/templates/parsing_rules.hpp"

namespace vlshot::app {

struct TapcResources {
  const AnswerVocabulary& vocab;
  const DemonstrationBank& bank;
  ParseProvider* parses;
  InfillLm& lm;
  FilteredSetCache* cache = nullptr;
};

/// Where a prompt set came from; written next to every prediction.
struct PromptProvenance {
  std::string route;  // masked | yesno | qip
  std::string template_text;
  std::string template_source;  // demo | parsing | qip
  std::optional<double> confidence;
  std::string filter_mode;  // plain | demonstrated | none
  std::size_t k = 0;
  std::size_t prompts = 0;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"route", route},        {"template", template_text}, {"source", template_source},
                        {"filter", filter_mode}, {"k", k},                    {"prompts", prompts}};
    j["confidence"] = confidence ? nlohmann::json(*confidence) : nlohmann::json(nullptr);
    if (!warnings.empty()) j["warnings"] = warnings;
    return j;
  }
};

struct BuiltPrompts {
  PromptSet set;
  PromptProvenance provenance;
};

/// Auxiliary-initial questions without an "or" alternative are answered yes/no.
inline bool is_yesno_question(const std::string& question) {
  static const char* aux[] = {"is",  "are",   "was",    "were", "am",    "do",     "does", "did",  "can",
                              "could", "will", "would", "has",  "have",  "had",    "should", "may", "might",
                              "must", "isn't", "aren't", "doesn't", "don't", "didn't", "wasn't", "can't"};
  const auto words = text::split_ws(text::lower(question));
  if (words.empty()) return false;
  bool initial = false;
  for (const char* a : aux) initial |= words[0] == a;
  if (!initial) return false;
  for (const auto& w : words)
    if (w == "or") return false;
  return true;
}

namespace detail {

template <typename T>
std::span<const T> first_n(const std::vector<T>& v, std::size_t n) {
  return std::span<const T>(v.data(), n == 0 ? v.size() : std::min(n, v.size()));
}

inline std::string error_note(const Error& e) { return std::string(to_string(e.code())) + ": " + e.what(); }

}  // namespace detail

/// The masked template for a non-yes/no question: generated and parsed
/// candidates combined by the ensemble threshold, honoring the ablations.
inline MaskedTemplate build_masked_template(const VqaExample& ex, const TapcConfig& cfg, TapcResources& res,
                                            std::vector<std::string>& warnings) {
  std::optional<MaskedTemplate> demo, parsed;
  if (!cfg.no_demo_template) {
    const auto* set = res.bank.find(ex.question_type);
    if (set && !set->masked.empty()) {
      try {
        demo = generate_template_demo(res.lm, ex.question, detail::first_n(set->masked, cfg.template_demos),
                                      ex.question_type);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::generation_failure) throw;
        warnings.push_back(detail::error_note(e));
      }
    } else {
      warnings.push_back("no demonstrations for question type '" + ex.question_type + "'");
    }
  }
  if (!cfg.no_parsing_template) {
    require(res.parses != nullptr, ErrorCode::configuration, "parsing template requested without a parse provider");
    try {
      parsed = generate_template_parsing(res.parses->parse(ex.question), ex.question, ex.question_type);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::unsupported_question && e.code() != ErrorCode::conversion) throw;
      warnings.push_back(detail::error_note(e));
    }
  }
  // with one path ablated the other is used regardless of confidence
  const double threshold = cfg.no_parsing_template ? -std::numeric_limits<double>::infinity() : cfg.ensemble_threshold;
  return ensemble_template(demo, parsed, threshold);
}

inline YesNoPromptPair build_yesno_pair(const VqaExample& ex, const TapcConfig& cfg, TapcResources& res,
                                        std::vector<std::string>& warnings, std::string& source) {
  if (!cfg.no_demo_template) {
    const auto* set = res.bank.find(ex.question_type);
    if (set && !set->positive.empty() && !set->negative.empty()) {
      try {
        auto pair = generate_yesno_prompts(res.lm, ex.question, detail::first_n(set->positive, cfg.template_demos),
                                           detail::first_n(set->negative, cfg.template_demos));
        source = "demo";
        return pair;
      } catch (const Error& e) {
        if (e.code() != ErrorCode::yesno_generation || cfg.no_parsing_template) throw;
        warnings.push_back(detail::error_note(e));
      }
    } else if (cfg.no_parsing_template) {
      fail(ErrorCode::no_template, "no yes/no demonstrations for question type '" + ex.question_type + "'");
    }
  }
  require(res.parses != nullptr, ErrorCode::configuration, "parsing template requested without a parse provider");
  source = "parsing";
  return generate_yesno_parsing(res.parses->parse(ex.question), ex.question);
}

inline FilteredAnswerSet filter_answers(const MaskedTemplate& tmpl, const TapcConfig& cfg, TapcResources& res,
                                        std::span<const std::string> filled_demos, bool use_demos) {
  if (cfg.no_answer_filter) {
    FilteredAnswerSet all;
    all.k = res.vocab.size();
    for (std::size_t i = 0; i < res.vocab.size(); ++i) all.answers.push_back({res.vocab[i], i, 0.0});
    return all;
  }
  ScoringOptions opts;
  opts.max_demonstrations = cfg.filter_demos;
  const auto demos = filled_demos.first(std::min(filled_demos.size(), cfg.filter_demos));
  FilterCacheKey key{hash_text(tmpl.text), res.vocab.content_hash(),
                     use_demos && !demos.empty() ? FilterMode::demonstrated : FilterMode::plain,
                     use_demos ? hash_demos(demos) : 0, cfg.k, res.lm.name()};
  if (res.cache)
    if (auto hit = res.cache->get(key)) return *hit;
  auto set = use_demos ? filter_with_demos(res.lm, tmpl, demos, res.vocab, cfg.k, opts)
                       : filter_top_k(score_answers(res.lm, tmpl, res.vocab, opts), cfg.k);
  if (res.cache) res.cache->put(key, set);
  return set;
}

/// Full TAP-C prompt construction for one question. filled_demos, when
/// given, are the answered statements used for demonstrated filtering.
inline BuiltPrompts build_prompts(const VqaExample& ex, const TapcConfig& cfg, TapcResources& res,
                                  const std::vector<std::string>* filled_demos = nullptr) {
  BuiltPrompts out;
  auto& prov = out.provenance;
  if (cfg.qip_baseline) {
    out.set = build_qip_prompts(ex.question, res.vocab.answers());
    prov.route = "qip";
    prov.template_text = "question: " + ex.question + " answer: [mask]";
    prov.template_source = "qip";
    prov.filter_mode = "none";
    prov.k = res.vocab.size();
    prov.prompts = out.set.size();
    return out;
  }
  if (is_yesno_question(ex.question)) {
    auto pair = build_yesno_pair(ex, cfg, res, prov.warnings, prov.template_source);
    out.set = assemble_prompts(pair);
    prov.route = "yesno";
    prov.template_text = pair.positive + " | " + pair.negative;
    prov.filter_mode = "none";
    prov.k = 2;
    prov.prompts = 2;
    return out;
  }
  const auto tmpl = build_masked_template(ex, cfg, res, prov.warnings);
  const bool use_demos = cfg.demo_filter && filled_demos != nullptr;
  const std::span<const std::string> demos =
      filled_demos ? std::span<const std::string>(*filled_demos) : std::span<const std::string>{};
  auto answers = filter_answers(tmpl, cfg, res, demos, use_demos);
  for (auto& w : answers.warnings) prov.warnings.push_back(std::move(w));
  require(!answers.answers.empty(), ErrorCode::assembly, "no finite-scoring answer for '" + tmpl.text + "'");
  out.set = assemble_prompts(tmpl, answers);
  prov.route = "masked";
  prov.template_text = tmpl.text;
  prov.template_source = std::string(to_string(tmpl.source));
  prov.confidence = tmpl.confidence;
  prov.filter_mode = cfg.no_answer_filter ? "none" : std::string(to_string(answers.mode));
  prov.k = answers.k;
  prov.prompts = out.set.size();
  return out;
}

}  // namespace vlshot::app
