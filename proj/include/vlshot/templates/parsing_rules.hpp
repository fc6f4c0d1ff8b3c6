#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/core/text.hpp"
#include "vlshot/templates/morphology.hpp"
#include "vlshot/templates/parse.hpp"
#include "vlshot/templates/types.hpp"

namespace vlshot {

namespace rules {

// Question-to-statement conversion over a Universal Dependencies parse.
//
// A wh-question is read as  [fronted phrase] [aux/copula or main verb] ...
// The fronted phrase runs from the start of the question to the first
// auxiliary, copula, or finite root verb after the wh-word. If the clause
// subject lies inside the fronted phrase, word order is already declarative
// and only the wh-word is replaced; otherwise the auxiliary is moved behind
// the subject (or absorbed by do-support) and the phrase is put back at its
// gap: right after its verb for objects, at the end of the clause otherwise.

inline bool is_wh_word(const std::string& w) {
  static const std::set<std::string> wh = {"what", "which", "who", "whom", "whose", "where", "when", "why", "how"};
  return wh.count(w) > 0;
}

inline bool is_aux_rel(const std::string& deprel) {
  return deprel == "aux" || deprel == "aux:pass" || deprel == "cop";
}

inline bool is_subject_rel(const std::string& deprel) {
  return deprel == "nsubj" || deprel == "nsubj:pass" || deprel == "csubj" || deprel == "csubj:pass";
}

class Analysis {
 public:
  explicit Analysis(const ParseResult& p) : p_(p) {
    validate(p_);
    n_ = static_cast<int>(p_.tokens.size());
    while (n_ > 0 && tok(n_ - 1).upos == "PUNCT") --n_;
    require(n_ > 0, ErrorCode::conversion, "question has no content tokens");
  }

  const ParseToken& tok(int i) const { return p_.tokens[static_cast<std::size_t>(i)]; }
  int size() const { return n_; }
  int root() const { return p_.root_index; }
  std::string lower(int i) const { return text::lower(tok(i).form); }
  std::string lemma(int i) const { return text::lower(tok(i).lemma); }

  /// Surface form as it should appear once token i is no longer sentence
  /// initial.
  std::string form(int i) const {
    const auto& t = tok(i);
    if (i == 0 && t.upos != "PROPN" && t.form != "I") return text::lower(t.form);
    if (t.form == "n't") return "not";
    return t.form;
  }

  bool in_subtree(int node, int ancestor) const {
    for (int cur = node; cur != -1; cur = tok(cur).head)
      if (cur == ancestor) return true;
    return false;
  }

  std::pair<int, int> subtree_span(int node) const {
    int lo = node, hi = node;
    for (int i = 0; i < n_; ++i) {
      if (in_subtree(i, node)) {
        lo = std::min(lo, i);
        hi = std::max(hi, i);
      }
    }
    return {lo, hi};
  }

  /// Clause subject of head: an expletive "there" wins, then nsubj/csubj.
  int subject_of(int head) const {
    int found = -1;
    for (int i = 0; i < n_; ++i) {
      if (tok(i).head != head) continue;
      if (tok(i).deprel == "expl") return i;
      if (found < 0 && is_subject_rel(tok(i).deprel)) found = i;
    }
    return found;
  }

  bool has_dependent(int head, const std::string& deprel) const {
    for (int i = 0; i < static_cast<int>(p_.tokens.size()); ++i)
      if (tok(i).head == head && tok(i).deprel == deprel) return true;
    return false;
  }

  int first_wh() const {
    for (int i = 0; i < n_; ++i)
      if (is_wh_word(lower(i))) return i;
    return -1;
  }

  bool aux_initial() const {
    const auto& t = tok(0);
    if (t.upos == "AUX" || is_aux_rel(t.deprel)) return true;
    const auto l = lemma(0);
    return root() == 0 && (l == "be" || l == "have" || l == "do");
  }

  /// End of the fronted phrase: first aux/copula or finite root verb after w.
  int boundary_after(int w) const {
    for (int i = w + 1; i < n_; ++i) {
      if (is_aux_rel(tok(i).deprel)) return i;
      if (i == root() && (tok(i).upos == "VERB" || tok(i).upos == "AUX")) return i;
    }
    return -1;
  }

  /// Token of [lo, hi) whose head lies outside the range.
  int phrase_head(int lo, int hi) const {
    for (int i = lo; i < hi; ++i) {
      const int h = tok(i).head;
      if (h < lo || h >= hi) return i;
    }
    return lo;
  }

  bool clause_has_be(int from) const {
    for (int i = from; i < n_; ++i) {
      if (lemma(i) != "be") continue;
      if (is_aux_rel(tok(i).deprel) || i == root()) return true;
    }
    return false;
  }

 private:
  const ParseResult& p_;
  int n_ = 0;
};

inline std::vector<std::string> substitute_phrase(const Analysis& a, int w, int end, bool subject_role) {
  std::vector<std::string> out;
  for (int i = 0; i < w; ++i) out.push_back(a.form(i));
  const auto wh = a.lower(w);
  const std::string next = w + 1 < end ? a.lower(w + 1) : std::string{};
  auto tail = [&](int from) {
    for (int i = from; i < end; ++i) out.push_back(a.form(i));
  };
  const std::string mask(kMask);
  if (wh == "how") {
    out.push_back(mask);
    tail(next == "many" || next == "much" ? w + 2 : w + 1);
  } else if ((wh == "which" || wh == "what") && w + 1 < end && a.tok(w).deprel == "det") {
    out.insert(out.end(), {"the", mask});
    tail(w + 1);
  } else if (wh == "which" || wh == "what") {
    if (subject_role) out.push_back("the");
    out.push_back(mask);
    tail(w + 1);
  } else if (wh == "whose") {
    out.push_back(mask + "'s");
    tail(w + 1);
  } else if (wh == "why") {
    out.insert(out.end(), {"because", "of", mask});
    tail(w + 1);
  } else if (wh == "where" || wh == "when") {
    out.insert(out.end(), {"at", mask});
    tail(w + 1);
  } else {  // who, whom
    out.push_back(mask);
    tail(w + 1);
  }
  return out;
}

inline std::string finish_statement(const std::vector<std::string>& words, bool period) {
  auto s = text::capitalize_first(text::tidy_punctuation(text::join(words)));
  if (period) s += '.';
  return s;
}

inline bool is_pronoun_subject(const Analysis& a, int subj, std::pair<int, int> span) {
  if (span.first != span.second) return false;
  const auto l = a.lower(subj);
  return a.tok(subj).upos == "PRON" || l == "this" || l == "that" || l == "these" || l == "those";
}

/// Declarative word order for an auxiliary-initial question; entries carry
/// the source token index (-1 for inserted words) so callers can rewrite spans.
inline std::vector<std::pair<int, std::string>> declarative_from_aux_initial(const Analysis& a, bool negate) {
  const int root = a.root();
  const int subj = a.subject_of(root);
  require(subj > 0, ErrorCode::conversion, "auxiliary-initial question without a subject after the auxiliary");
  const auto span = a.subtree_span(subj);
  require(span.first >= 1, ErrorCode::conversion, "subject overlaps the fronted auxiliary");
  const bool do_support = a.lemma(0) == "do" && root != 0;

  std::vector<std::pair<int, std::string>> out;
  for (int i = span.first; i <= span.second; ++i) out.emplace_back(i, a.form(i));
  if (!do_support || negate) out.emplace_back(0, a.form(0));
  if (negate) out.emplace_back(-1, "not");
  for (int i = 1; i < span.first; ++i) out.emplace_back(i, a.form(i));
  for (int i = span.second + 1; i < a.size(); ++i) {
    if (i == root && do_support && !negate)
      out.emplace_back(i, morph::inflect_like_do(a.tok(0).form, a.tok(i).lemma));
    else
      out.emplace_back(i, a.form(i));
  }
  return out;
}

inline std::vector<std::string> words_of(const std::vector<std::pair<int, std::string>>& v) {
  std::vector<std::string> out;
  for (const auto& [_, w] : v) out.push_back(w);
  return out;
}

/// "Is this a cat or a dog?" -> "This is [mask]."
inline std::string alternative_template(const Analysis& a) {
  int cc = -1;
  for (int i = 0; i < a.size(); ++i)
    if (a.tok(i).deprel == "cc" && a.lower(i) == "or") cc = i;
  if (cc < 0)
    fail(ErrorCode::conversion, "yes/no question has no answer slot; use the yes/no prompt path");
  const int conj = a.tok(cc).head;
  const int first = a.tok(conj).head;
  require(first >= 0, ErrorCode::conversion, "alternative question: coordination has no head");
  int lo = first;
  for (int i = 0; i < first; ++i) {
    const auto& rel = a.tok(i).deprel;
    if (a.tok(i).head == first && (rel == "det" || rel == "amod" || rel == "nummod" || rel == "compound" ||
                                    rel == "nmod:poss"))
      lo = std::min(lo, i);
  }
  const int hi = a.subtree_span(conj).second;
  auto decl = declarative_from_aux_initial(a, false);
  std::vector<std::string> words;
  bool placed = false;
  for (const auto& [idx, w] : decl) {
    if (idx >= lo && idx <= hi) {
      if (!placed) words.emplace_back(kMask);
      placed = true;
      continue;
    }
    words.push_back(w);
  }
  return finish_statement(words, true);
}

inline std::string convert_wh_question(const Analysis& a, int w) {
  const int b = a.boundary_after(w);
  require(b > w, ErrorCode::conversion, "no auxiliary, copula or main verb after the wh-word");
  const int root = a.root();
  const int subj = a.subject_of(root);
  require(subj >= 0, ErrorCode::conversion, "cannot locate the clause subject");

  std::vector<std::string> words;
  if (subj < b) {
    // Subject question: order is already declarative.
    const auto wh = a.lower(w);
    const std::string next = w + 1 < b ? a.lower(w + 1) : std::string{};
    const bool quantity = wh == "how" && (next == "many" || next == "much");
    auto phrase = substitute_phrase(a, w, b, true);
    if (quantity && a.clause_has_be(b)) {
      words = {"there", next == "many" ? "are" : "is"};
      words.insert(words.end(), phrase.begin(), phrase.end());
      for (int i = b; i < a.size(); ++i) {
        const auto& rel = a.tok(i).deprel;
        if (is_aux_rel(rel) || rel == "expl" || (i == root && a.lemma(i) == "be")) continue;
        words.push_back(a.form(i));
      }
    } else {
      words = std::move(phrase);
      for (int i = b; i < a.size(); ++i) words.push_back(a.form(i));
    }
    return finish_statement(words, true);
  }

  const auto span = a.subtree_span(subj);
  require(span.first >= b, ErrorCode::conversion, "subject overlaps the fronted phrase");
  const bool do_support = a.lemma(b) == "do" && a.tok(b).deprel == "aux" && b != root;
  std::vector<std::string> subject;
  for (int i = span.first; i <= span.second; ++i) subject.push_back(a.form(i));
  std::vector<std::string> moved;
  for (int i = b; i < span.first; ++i) {
    if (i == b && do_support) continue;
    moved.push_back(a.form(i));
  }

  // Copular question about an attribute noun: "What color is X" -> "The color of X is [mask]".
  const auto& wt = a.tok(w);
  const bool attribute = root < b && root != w && a.tok(root).upos == "NOUN" && wt.head == root &&
                         wt.deprel == "det" && !a.has_dependent(root, "case");
  if (attribute) {
    words.push_back("the");
    for (int i = 0; i < b; ++i)
      if (i != w) words.push_back(a.form(i));
    if (!is_pronoun_subject(a, subj, span)) {
      words.push_back("of");
      words.insert(words.end(), subject.begin(), subject.end());
    }
    words.insert(words.end(), moved.begin(), moved.end());
    words.emplace_back(kMask);
    for (int i = span.second + 1; i < a.size(); ++i) words.push_back(a.form(i));
    return finish_statement(words, true);
  }

  const auto phrase = substitute_phrase(a, w, b, false);
  const int head = a.phrase_head(0, b);
  int anchor = -1;  // insert the phrase after this token
  const auto& hrel = a.tok(head).deprel;
  if ((hrel == "obj" || hrel == "iobj") && a.tok(head).head > span.second) {
    anchor = a.tok(head).head;
    if (anchor + 1 < a.size() && a.tok(anchor + 1).deprel == "compound:prt" && a.tok(anchor + 1).head == anchor)
      ++anchor;
  }
  words = subject;
  words.insert(words.end(), moved.begin(), moved.end());
  for (int i = span.second + 1; i < a.size(); ++i) {
    if (i == root && do_support)
      words.push_back(morph::inflect_like_do(a.tok(b).form, a.tok(i).lemma));
    else
      words.push_back(a.form(i));
    if (i == anchor) words.insert(words.end(), phrase.begin(), phrase.end());
  }
  if (anchor < 0) words.insert(words.end(), phrase.begin(), phrase.end());
  return finish_statement(words, true);
}

}  // namespace rules

/// Dependency-rule conversion of a question into a masked statement.
inline MaskedTemplate generate_template_parsing(const ParseResult& parse, const std::string& question,
                                                const std::string& question_type = {}) {
  const rules::Analysis a(parse);
  const int w = a.first_wh();
  std::string statement;
  if (w >= 0) {
    statement = rules::convert_wh_question(a, w);
  } else if (a.aux_initial()) {
    statement = rules::alternative_template(a);
  } else {
    fail(ErrorCode::unsupported_question, "no wh-word and not auxiliary-initial: '" + question + "'");
  }
  const auto masks = text::count_occurrences(statement, kMask);
  if (masks != 1)
    fail(ErrorCode::conversion,
         "rule application produced " + std::to_string(masks) + " masks for '" + question + "': " + statement);
  return MaskedTemplate{statement, TemplateSource::parsing, std::nullopt, question_type};
}

/// Affirming and negating statements for an auxiliary-initial question, built
/// from the same dependency rules. Used when generation is unavailable.
inline YesNoPromptPair generate_yesno_parsing(const ParseResult& parse, const std::string& question) {
  const rules::Analysis a(parse);
  if (!a.aux_initial()) fail(ErrorCode::unsupported_question, "not an auxiliary-initial question: '" + question + "'");
  YesNoPromptPair pair{rules::finish_statement(rules::words_of(rules::declarative_from_aux_initial(a, false)), false),
                       rules::finish_statement(rules::words_of(rules::declarative_from_aux_initial(a, true)), false)};
  validate(pair);
  return pair;
}

}  // namespace vlshot
