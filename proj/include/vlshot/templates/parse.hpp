#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "vlshot/core/error.hpp"
#include "vlshot/core/text.hpp"

namespace vlshot {

/// One token of a Universal Dependencies analysis. head is 0-based, -1 for
/// the root.
struct ParseToken {
  std::string form;
  std::string lemma;
  std::string upos;
  int head = -1;
  std::string deprel;
};

struct ParseResult {
  std::vector<ParseToken> tokens;
  int root_index = -1;
};

inline void validate(const ParseResult& p) {
  int roots = 0;
  const int n = static_cast<int>(p.tokens.size());
  require(n > 0, ErrorCode::contract, "parse has no tokens");
  for (int i = 0; i < n; ++i) {
    const auto& t = p.tokens[static_cast<std::size_t>(i)];
    if (t.head == -1) {
      ++roots;
      require(i == p.root_index, ErrorCode::contract, "parse root_index disagrees with head column");
    } else {
      require(t.head >= 0 && t.head < n && t.head != i, ErrorCode::contract,
              "parse token " + std::to_string(i) + " has head out of range");
    }
  }
  require(roots == 1, ErrorCode::contract, "parse must have exactly one root, found " + std::to_string(roots));
}

/// Reads CoNLL-U sentences. Multiword-token ranges (1-2) and empty nodes (1.1)
/// are skipped; the "# text =" comment names the sentence.
struct ConlluSentence {
  std::string text;
  ParseResult parse;
};

inline std::vector<ConlluSentence> read_conllu(std::istream& in, const std::string& origin = "<conllu>") {
  std::vector<ConlluSentence> out;
  ConlluSentence cur;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (cur.parse.tokens.empty()) return;
    for (std::size_t i = 0; i < cur.parse.tokens.size(); ++i)
      if (cur.parse.tokens[i].head == -1) cur.parse.root_index = static_cast<int>(i);
    try {
      validate(cur.parse);
    } catch (const Error& e) {
      fail(ErrorCode::load, origin + ": sentence ending before line " + std::to_string(lineno) + ": " + e.what());
    }
    out.push_back(std::move(cur));
    cur = ConlluSentence{};
  };
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      const auto body = text::trim(std::string_view(line).substr(1));
      if (text::starts_with(body, "text =")) cur.text = text::trim(std::string_view(body).substr(6));
      continue;
    }
    std::vector<std::string> cols;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, '\t');) cols.push_back(c);
    require(cols.size() >= 8, ErrorCode::load,
            origin + ":" + std::to_string(lineno) + ": expected 10 tab-separated columns");
    if (cols[0].find_first_of("-.") != std::string::npos) continue;
    ParseToken tok;
    tok.form = cols[1];
    tok.lemma = cols[2] == "_" ? text::lower(cols[1]) : cols[2];
    tok.upos = cols[3];
    try {
      tok.head = std::stoi(cols[6]) - 1;
    } catch (const std::exception&) {
      fail(ErrorCode::load, origin + ":" + std::to_string(lineno) + ": bad head '" + cols[6] + "'");
    }
    tok.deprel = cols[7];
    cur.parse.tokens.push_back(std::move(tok));
  }
  flush();
  for (auto& s : out) {
    if (s.text.empty()) {
      std::vector<std::string> forms;
      for (const auto& t : s.parse.tokens) forms.push_back(t.form);
      s.text = text::tidy_punctuation(text::join(forms));
    }
  }
  return out;
}

/// External parser contract: question text in, UD analysis out.
class ParseProvider {
 public:
  virtual ~ParseProvider() = default;
  virtual ParseResult parse(const std::string& question) = 0;
};

/// Serves analyses precomputed by an external UD parser and stored as CoNLL-U.
class ConlluParseProvider : public ParseProvider {
 public:
  explicit ConlluParseProvider(std::vector<ConlluSentence> sentences) {
    for (auto& s : sentences) by_text_.emplace(key(s.text), std::move(s.parse));
  }

  static ConlluParseProvider load(const std::filesystem::path& file) {
    std::ifstream in(file);
    require(static_cast<bool>(in), ErrorCode::io, "cannot open " + file.string());
    return ConlluParseProvider(read_conllu(in, file.string()));
  }

  ParseResult parse(const std::string& question) override {
    auto it = by_text_.find(key(question));
    require(it != by_text_.end(), ErrorCode::adapter, "no parse available for question '" + question + "'");
    return it->second;
  }

  std::size_t size() const { return by_text_.size(); }

 private:
  static std::string key(std::string_view s) { return text::collapse_ws(text::lower(s)); }
  std::unordered_map<std::string, ParseResult> by_text_;
};

}  // namespace vlshot
