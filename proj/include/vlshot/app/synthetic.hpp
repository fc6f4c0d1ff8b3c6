#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/app/backends.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/random.hpp"
#include "vlshot/entailment/synthetic.hpp"

namespace vlshot::app {

struct SyntheticOptions {
  std::size_t train_images = 120;
  std::size_t val_images = 40;
  std::size_t ve_train = 120, ve_valid = 20, ve_test = 40, ve_dim = 16;
  std::uint64_t seed = 0;
};

struct SyntheticFiles {
  fs::path dir;
  std::vector<fs::path> written;
};

namespace synth {

struct Noun {
  const char* one;
  const char* many;
};

inline constexpr Noun kNouns[] = {{"apple", "apples"}, {"car", "cars"},   {"dog", "dogs"},     {"chair", "chairs"},
                                  {"kite", "kites"},   {"bus", "buses"},  {"cup", "cups"},     {"umbrella", "umbrellas"},
                                  {"bench", "benches"}, {"boat", "boats"}, {"horse", "horses"}, {"vase", "vases"}};
inline constexpr const char* kColors[] = {"white", "black", "red", "blue", "green", "yellow", "brown", "orange"};
inline constexpr const char* kFiller[] = {"table", "nothing", "left", "right", "tennis", "frisbee", "pizza",
                                          "kitchen", "water", "grass", "sunny", "man", "woman", "wood"};

// CoNLL-U rows: form, lemma, upos, head, deprel. "{N}", "{P}", "{C}" are
// replaced by the noun, its plural and a color.
struct Row {
  const char* form;
  const char* lemma;
  const char* upos;
  int head;
  const char* deprel;
};

inline const std::vector<Row>& color_rows() {
  static const std::vector<Row> r = {{"What", "what", "DET", 2, "det"},  {"color", "color", "NOUN", 0, "root"},
                                     {"is", "be", "AUX", 2, "cop"},      {"the", "the", "DET", 5, "det"},
                                     {"{N}", "{N}", "NOUN", 2, "nsubj"}, {"?", "?", "PUNCT", 2, "punct"}};
  return r;
}

inline const std::vector<Row>& count_rows() {
  static const std::vector<Row> r = {{"How", "how", "ADV", 2, "advmod"},  {"many", "many", "ADJ", 3, "amod"},
                                     {"{P}", "{N}", "NOUN", 7, "nsubj"},  {"are", "be", "AUX", 7, "cop"},
                                     {"in", "in", "ADP", 7, "case"},      {"the", "the", "DET", 7, "det"},
                                     {"picture", "picture", "NOUN", 0, "root"}, {"?", "?", "PUNCT", 7, "punct"}};
  return r;
}

inline const std::vector<Row>& yesno_rows() {
  static const std::vector<Row> r = {{"Is", "be", "AUX", 4, "cop"},      {"the", "the", "DET", 3, "det"},
                                     {"{N}", "{N}", "NOUN", 4, "nsubj"}, {"{C}", "{C}", "ADJ", 0, "root"},
                                     {"?", "?", "PUNCT", 4, "punct"}};
  return r;
}

inline std::string fill(std::string s, const Noun& n, const std::string& color) {
  auto sub = [&](const std::string& key, const std::string& v) {
    for (auto p = s.find(key); p != std::string::npos; p = s.find(key)) s.replace(p, key.size(), v);
  };
  sub("{N}", n.one);
  sub("{P}", n.many);
  sub("{C}", color);
  return s;
}

inline std::string sentence_text(const std::vector<Row>& rows, const Noun& n, const std::string& color) {
  std::string out;
  for (const auto& r : rows) {
    const auto f = fill(r.form, n, color);
    if (!out.empty() && f != "?") out += ' ';
    out += f;
  }
  return out;
}

inline std::string conllu(const std::vector<Row>& rows, const Noun& n, const std::string& color, const std::string& id) {
  std::string out = "# sent_id = " + id + "\n# text = " + sentence_text(rows, n, color) + "\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    out += std::to_string(i + 1) + '\t' + fill(r.form, n, color) + '\t' + fill(r.lemma, n, color) + '\t' + r.upos +
           "\t_\t_\t" + std::to_string(r.head) + '\t' + r.deprel + "\t_\t_\n";
  }
  return out + '\n';
}

}  // namespace synth

/// Writes a self-consistent toy corpus: VQA train/val splits whose image
/// ids describe the scene ("text:3 red cars ..."), the answer vocabulary,
/// CoNLL-U parses for every question, an aligned SNLI-VE fixture with its
/// embedding table, and ready-to-run configs.
inline SyntheticFiles write_synthetic(const fs::path& dir, const SyntheticOptions& opt) {
  using namespace synth;
  fs::create_directories(dir);
  SyntheticFiles files{dir, {}};
  auto put = [&](const std::string& name, const std::string& body) {
    std::ofstream out(dir / name);
    require(static_cast<bool>(out), ErrorCode::io, "cannot write " + (dir / name).string());
    out << body;
    files.written.push_back(dir / name);
  };
  auto put_json = [&](const std::string& name, const nlohmann::json& j) { put(name, j.dump(1) + "\n"); };

  std::vector<std::string> vocab = {"yes", "no"};
  for (auto* c : kColors) vocab.push_back(c);
  for (int k = 1; k <= 6; ++k) vocab.push_back(std::to_string(k));
  for (const auto& n : kNouns) vocab.push_back(n.one);
  for (auto* f : kFiller) vocab.push_back(f);
  std::string vocab_txt;
  for (const auto& v : vocab) vocab_txt += v + '\n';
  put("vocab.txt", vocab_txt);

  std::map<std::string, std::string> parses;  // text -> conllu block
  const std::size_t n_colors = std::size(kColors);
  auto make_split = [&](const std::string& name, std::size_t images, std::uint64_t stream, long long id_base) {
    auto rng = make_rng(opt.seed, stream);
    nlohmann::json qs = nlohmann::json::array(), anns = nlohmann::json::array();
    for (std::size_t i = 0; i < images; ++i) {
      const auto& noun = kNouns[uniform_below(rng, std::size(kNouns))];
      const std::size_t ci = uniform_below(rng, n_colors);
      const std::string color = kColors[ci];
      const int count = 1 + int(uniform_below(rng, 6));
      const std::string image = "text:" + std::to_string(count) + " " + color + " " + (count == 1 ? noun.one : noun.many) +
                                " in scene " + name + std::to_string(i);
      const bool truthful = uniform01(rng) < 0.5;
      const std::string asked = truthful ? color : kColors[(ci + 1 + uniform_below(rng, n_colors - 1)) % n_colors];
      struct Q {
        const std::vector<Row>* rows;
        std::string answer, answer_type, asked_color;
        std::vector<std::string> noise;
      };
      const Q questions[] = {
          {&color_rows(), color, "other", color, {kColors[(ci + 1) % n_colors], kColors[(ci + 2) % n_colors]}},
          {&count_rows(), std::to_string(count), "number", color,
           {std::to_string(count % 6 + 1), std::to_string((count + 4) % 6 + 1)}},
          {&yesno_rows(), asked == color ? "yes" : "no", "yes/no", asked, {asked == color ? "no" : "yes"}}};
      for (std::size_t j = 0; j < std::size(questions); ++j) {
        const auto& q = questions[j];
        const auto qtext = sentence_text(*q.rows, noun, q.asked_color);
        const long long qid = id_base + static_cast<long long>(i) * 10 + static_cast<long long>(j);
        parses.emplace(qtext, conllu(*q.rows, noun, q.asked_color, "syn" + std::to_string(parses.size() + 1)));
        qs.push_back({{"image_id", image}, {"question", qtext}, {"question_id", qid}});
        nlohmann::json answers = nlohmann::json::array();
        for (int a = 0; a < 10; ++a) {
          const bool noisy = a >= 8 && uniform01(rng) < 0.5;
          const auto& txt = noisy ? q.noise[uniform_below(rng, q.noise.size())] : q.answer;
          answers.push_back({{"answer", txt}, {"answer_confidence", "yes"}, {"answer_id", a + 1}});
        }
        anns.push_back({{"question_id", qid},
                        {"image_id", image},
                        {"question_type", ""},
                        {"answer_type", q.answer_type},
                        {"multiple_choice_answer", q.answer},
                        {"answers", answers}});
      }
    }
    put_json(name + "_questions.json", {{"info", {{"description", "synthetic"}}}, {"questions", qs}});
    put_json(name + "_annotations.json", {{"annotations", anns}});
  };
  make_split("train", opt.train_images, 0x7121, 1000000);
  make_split("val", opt.val_images, 0x7a11, 2000000);
  std::string conll;
  for (const auto& [_, block] : parses) conll += block;
  put("parses.conllu", conll);

  const auto ve = make_aligned_entailment_fixture(opt.ve_train, opt.ve_valid, opt.ve_test, opt.ve_dim, opt.seed);
  auto write_ve = [&](const std::string& name, const std::vector<VeExample>& split) {
    std::string body;
    for (const auto& ex : split)
      body += nlohmann::json{{"Flikr30kID", ex.premise_image_ref},
                             {"pairID", ex.pair_id},
                             {"sentence1", ex.premise_caption},
                             {"sentence2", ex.hypothesis},
                             {"gold_label", to_string(ex.label)}}
                  .dump() +
              '\n';
    put(name, body);
  };
  write_ve("snli_ve_train.jsonl", ve.train);
  write_ve("snli_ve_dev.jsonl", ve.valid);
  write_ve("snli_ve_test.jsonl", ve.test);
  save_table_encoder(*ve.encoder, dir / "embeddings.json");
  files.written.push_back(dir / "embeddings.json");

  const nlohmann::json vqa_data = {{"questions", "val_questions.json"},
                                   {"annotations", "val_annotations.json"},
                                   {"train_questions", "train_questions.json"},
                                   {"train_annotations", "train_annotations.json"},
                                   {"vocab", "vocab.txt"},
                                   {"parses", "parses.conllu"}};
  // k scaled to the 42-answer vocabulary
  put_json("zero_shot.json", {{"command", "zero-shot-vqa"},
                              {"data", vqa_data},
                              {"tapc", {{"k", 5}}},
                              {"output", {{"dir", "runs/zero_shot"}}}});
  put_json("few_shot.json", {{"command", "few-shot-vqa"},
                             {"data", vqa_data},
                             {"tapc", {{"k", 5}}},
                             {"few_shot", {{"shots", 4}, {"mode", {"binor", "bitfit", "full"}}, {"learning_rate", 0.01}}},
                             {"output", {{"dir", "runs/few_shot"}}}});
  put_json("entailment.json",
           {{"command", "entailment"},
            {"data", {{"snli_ve_train", "snli_ve_train.jsonl"}, {"snli_ve_valid", "snli_ve_dev.jsonl"}, {"snli_ve_test", "snli_ve_test.jsonl"}}},
            {"backend", {{"encoder", "table"}, {"encoder_table", "embeddings.json"}}},
            {"entailment",
             {{"grid", {{{"learning_rate", 0.001}, {"batch_size", 32}, {"dropout", 0.0}},
                        {{"learning_rate", 0.003}, {"batch_size", 32}, {"dropout", 0.1}}}},
              {"hidden", {64, 32}},
              {"control", "black_image"}}},
            {"output", {{"dir", "runs/entailment"}}}});
  return files;
}

}  // namespace vlshot::app
