#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "vlshot/core/hash.hpp"
#include "vlshot/core/text.hpp"
#include "vlshot/templates/infill_lm.hpp"
#include "vlshot/templates/parse.hpp"
#include "vlshot/templates/parsing_rules.hpp"

namespace vlshot::app {

/// Deterministic stand-in for a span-infilling LM.
///
/// Scoring: -0.01 * vocabulary rank, -0.7 per extra word, +2.5 when a cue
/// word of the answer's class ("color", "many", a leading "there are", ...)
/// occurs in the sentinel sentence, +1.0 when the answer appears in the
/// text ahead of it.
///
/// Generation: when the context ends with the sentinel it rewrites the
/// trailing question with the dependency rules (parses required) and
/// assigns a per-question confidence in [-0.9, -0.1]; otherwise it returns
/// the best-scoring answers as spans.
class LexiconLm : public InfillLm {
 public:
  explicit LexiconLm(std::vector<std::string> answers, ParseProvider* parses = nullptr)
      : answers_(std::move(answers)), parses_(parses) {
    for (std::size_t i = 0; i < answers_.size(); ++i) rank_.emplace(answers_[i], i);
    for (const char* c : {"white", "black", "red", "blue", "green", "yellow", "brown", "gray", "grey", "orange",
                          "pink", "purple", "silver", "tan", "gold", "beige"})
      classes_["color"].insert(c);
  }

  std::string name() const override { return "lexicon-mock"; }
  std::size_t count_tokens(const std::string& span) const override { return text::split_ws(span).size(); }

  static std::vector<std::string> words(const std::string& s) {
    std::string cleaned;
    for (char c : text::lower(s)) cleaned.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : ' ');
    return text::split_ws(cleaned);
  }

  double score(const std::string& context, const std::string& span) const {
    const auto sentinel_at = context.find(sentinel());
    const auto cut = sentinel_at == std::string::npos ? std::string::npos : context.rfind(". ", sentinel_at);
    const auto prefix = cut == std::string::npos ? std::string{} : context.substr(0, cut + 1);
    const auto sentence = cut == std::string::npos ? context : context.substr(cut + 2);
    auto it = rank_.find(span);
    double v = it == rank_.end() ? -5.0 : -0.01 * double(it->second);
    const auto span_words = words(span);
    if (span_words.size() > 1) v -= 0.7 * double(span_words.size() - 1);
    const auto sw = words(sentence);
    auto has = [&](const std::vector<std::string>& ws, const std::string& w) {
      return std::find(ws.begin(), ws.end(), w) != ws.end();
    };
    const auto lead = sentinel_at == std::string::npos ? std::string{} : text::lower(text::trim(context.substr(0, sentinel_at)));
    const bool counting = has(sw, "many") || has(sw, "number") || text::ends_with(lead, "there are");
    if (is_number(span) && counting) v += 2.5;
    if (classes_.at("color").count(span) && (has(sw, "color") || has(sw, "colour"))) v += 2.5;
    if (!prefix.empty() && span_words.size() == 1 && has(words(prefix), span_words[0])) v += 1.0;
    return v;
  }

 protected:
  std::vector<GeneratedSpan> do_generate(const std::string& context, const GenerationOptions& opts) override {
    const auto trimmed = text::trim(context);
    if (!text::ends_with(trimmed, sentinel())) return harvest(context, opts);
    if (!parses_) return {};
    auto body = text::trim(trimmed.substr(0, trimmed.size() - sentinel().size()));
    const auto q_end = body.size();
    std::size_t q_start = 0;
    if (q_end > 1) {
      const auto dot = body.find_last_of(".!", q_end - 2);
      if (dot != std::string::npos) q_start = dot + 1;
    }
    const auto question = text::trim(body.substr(q_start));
    const auto prefix = body.substr(0, q_start);
    try {
      const auto parse = parses_->parse(question);
      std::string statement;
      if (prefix.find(std::string(kMask)) != std::string::npos) {
        statement = generate_template_parsing(parse, question).text;
      } else {
        const auto lp = " " + text::lower(prefix) + " ";
        const bool negative = lp.find(" not ") != std::string::npos || lp.find("n't ") != std::string::npos;
        const auto pair = generate_yesno_parsing(parse, question);
        statement = negative ? pair.negative : pair.positive;
      }
      const auto n = std::max<std::size_t>(1, count_tokens(statement));
      const double per_token = -0.1 - 0.8 * double(hash_text(question) % 1000) / 999.0;
      return {GeneratedSpan{statement, std::vector<double>(n, per_token)}};
    } catch (const Error&) {
      return {};
    }
  }

  std::vector<double> do_score_spans(const std::string& context, const std::vector<std::string>& spans) override {
    std::vector<double> out;
    out.reserve(spans.size());
    for (const auto& s : spans) out.push_back(score(context, s));
    return out;
  }

 private:
  static bool is_number(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
  }

  std::vector<GeneratedSpan> harvest(const std::string& context, const GenerationOptions& opts) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (std::size_t i = 0; i < answers_.size(); ++i) ranked.emplace_back(score(context, answers_[i]), i);
    std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<GeneratedSpan> out;
    for (std::size_t i = 0; i < ranked.size() && i < opts.num_return; ++i) {
      const auto& a = answers_[ranked[i].second];
      const auto n = std::max<std::size_t>(1, count_tokens(a));
      out.push_back(GeneratedSpan{a, std::vector<double>(n, ranked[i].first / double(n))});
    }
    return out;
  }

  std::vector<std::string> answers_;
  std::map<std::string, std::size_t> rank_;
  std::map<std::string, std::set<std::string>> classes_;
  ParseProvider* parses_;
};

}  // namespace vlshot::app
