#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/core/error.hpp"
#include "vlshot/core/text.hpp"
#include "vlshot/dataset/taxonomy.hpp"
#include "vlshot/dataset/types.hpp"
#include "vlshot/dataset/vocabulary.hpp"

namespace vlshot {

struct VqaLoadReport {
  std::size_t records = 0;
  std::size_t distinct_images = 0;
  std::size_t majority_in_vocab = 0;
};

struct VqaSplit {
  std::vector<VqaExample> examples;
  VqaLoadReport report;
};

namespace detail {

inline nlohmann::json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open " + file.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::load, file.string() + ": malformed JSON at byte offset " + std::to_string(e.byte) + ": " + e.what());
  }
}

// question_id and image_id are integers in the official release; fixtures may
// use strings.
inline std::string id_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw nlohmann::json::type_error::create(302, "identifier must be a string or integer", &v);
}

inline std::string record_context(const std::filesystem::path& file, std::string_view array, std::size_t i) {
  return file.string() + ": record /" + std::string(array) + "/" + std::to_string(i);
}

}  // namespace detail

/// Joins a VQAv2 questions file and annotations file on question_id.
inline VqaSplit load_vqa_split(const std::filesystem::path& questions_file,
                               const std::filesystem::path& annotations_file, const AnswerVocabulary& vocab,
                               const QuestionTaxonomy& taxonomy) {
  const auto qdoc = detail::read_json_file(questions_file);
  const auto adoc = detail::read_json_file(annotations_file);
  require(qdoc.contains("questions") && qdoc["questions"].is_array(), ErrorCode::load,
          questions_file.string() + ": missing 'questions' array");
  require(adoc.contains("annotations") && adoc["annotations"].is_array(), ErrorCode::load,
          annotations_file.string() + ": missing 'annotations' array");

  struct Annotation {
    AnswerType answer_type;
    std::vector<std::string> answers;
    std::string majority;
    std::string image_id;
  };
  std::unordered_map<std::string, Annotation> annotations;
  const auto& arr = adoc["annotations"];
  annotations.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const auto& rec = arr[i];
    try {
      Annotation a;
      a.answer_type = parse_answer_type(rec.at("answer_type").get<std::string>());
      a.majority = rec.at("multiple_choice_answer").get<std::string>();
      a.image_id = detail::id_string(rec.at("image_id"));
      for (const auto& ans : rec.at("answers")) a.answers.push_back(ans.at("answer").get<std::string>());
      if (a.answers.size() != 10)
        fail(ErrorCode::load, detail::record_context(annotations_file, "annotations", i) + ": expected 10 answers, got " +
                                  std::to_string(a.answers.size()));
      auto id = detail::id_string(rec.at("question_id"));
      if (!annotations.emplace(id, std::move(a)).second)
        fail(ErrorCode::load, detail::record_context(annotations_file, "annotations", i) +
                                  ": duplicate question_id " + id);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::load, detail::record_context(annotations_file, "annotations", i) + ": " + e.what());
    } catch (const Error& e) {
      if (e.code() == ErrorCode::load) throw;
      fail(ErrorCode::load, detail::record_context(annotations_file, "annotations", i) + ": " + e.what());
    }
  }

  VqaSplit split;
  std::set<std::string> images;
  const auto& qs = qdoc["questions"];
  split.examples.reserve(qs.size());
  for (std::size_t i = 0; i < qs.size(); ++i) {
    const auto& rec = qs[i];
    VqaExample ex;
    try {
      ex.question_id = detail::id_string(rec.at("question_id"));
      ex.image_ref = detail::id_string(rec.at("image_id"));
      ex.question = rec.at("question").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::load, detail::record_context(questions_file, "questions", i) + ": " + e.what());
    }
    auto it = annotations.find(ex.question_id);
    if (it == annotations.end())
      fail(ErrorCode::load, "question_id " + ex.question_id + " has no annotation record");
    if (it->second.image_id != ex.image_ref)
      fail(ErrorCode::load, "question_id " + ex.question_id + ": image_id mismatch between questions (" +
                                ex.image_ref + ") and annotations (" + it->second.image_id + ")");
    if (text::trim(ex.question).empty())
      fail(ErrorCode::load, detail::record_context(questions_file, "questions", i) + ": empty question");
    ex.question_type = taxonomy.classify(ex.question);
    ex.answer_type = it->second.answer_type;
    ex.human_answers = std::move(it->second.answers);
    ex.majority_answer = std::move(it->second.majority);
    if (vocab.find(ex.majority_answer)) ++split.report.majority_in_vocab;
    images.insert(ex.image_ref);
    annotations.erase(it);
    split.examples.push_back(std::move(ex));
  }
  if (!annotations.empty())
    fail(ErrorCode::load, "annotation for question_id " + annotations.begin()->first + " has no question record");
  split.report.records = split.examples.size();
  split.report.distinct_images = images.size();
  return split;
}

/// SNLI-VE line-delimited records. Accepts the release's "Flikr30kID" key
/// alongside "Flickr30K_ID" / "image".
inline std::vector<VeExample> load_snli_ve_split(const std::filesystem::path& file) {
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open " + file.string());
  std::vector<VeExample> out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (text::trim(line).empty()) continue;
    const auto where = file.string() + ":" + std::to_string(lineno);
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::load, where + ": malformed record: " + e.what());
    }
    VeExample ex;
    try {
      for (const char* key : {"Flikr30kID", "Flickr30K_ID", "image"}) {
        if (rec.contains(key)) {
          ex.premise_image_ref = detail::id_string(rec[key]);
          break;
        }
      }
      require(!ex.premise_image_ref.empty(), ErrorCode::load, where + ": missing premise image id");
      ex.premise_caption = rec.value("sentence1", std::string{});
      ex.hypothesis = rec.at("sentence2").get<std::string>();
      ex.pair_id = rec.contains("pairID") ? detail::id_string(rec["pairID"]) : std::to_string(lineno);
      const auto label = rec.at("gold_label").get<std::string>();
      auto parsed = parse_entailment_label(label);
      if (!parsed) fail(ErrorCode::load, where + ": unknown label '" + label + "'");
      ex.label = *parsed;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::load, where + ": " + e.what());
    }
    out.push_back(std::move(ex));
  }
  return out;
}

}  // namespace vlshot
