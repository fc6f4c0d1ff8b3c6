#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vlshot/clip/bundle.hpp"
#include "vlshot/clip/embedding.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"
#include "vlshot/core/linalg.hpp"
#include "vlshot/filter/types.hpp"

namespace vlshot {

namespace detail {

inline Vector unit_or_fail(const Vector& raw, std::size_t dim, const std::string& who, Modality m, std::size_t index) {
  require(raw.size() == dim, ErrorCode::adapter,
          who + ": " + std::string(to_string(m)) + " input " + std::to_string(index) + " encoded to dimension " +
              std::to_string(raw.size()) + ", expected " + std::to_string(dim));
  const double n = l2_norm(raw);
  require(std::isfinite(n) && n > 0.0, ErrorCode::adapter,
          who + ": " + std::string(to_string(m)) + " input " + std::to_string(index) +
              " has a zero or non-finite embedding");
  Vector out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / n;
  return out;
}

inline std::vector<Embedding> encode(EncoderBundle& bundle, Modality m, std::span<const std::string> inputs,
                                     EmbeddingCache* cache) {
  require(!inputs.empty(), ErrorCode::contract, "encode: no inputs");
  const auto bundle_hash = hash_text(bundle.id());
  const auto fp = cache ? bundle.fingerprint() : 0;
  std::vector<Embedding> out(inputs.size());
  std::vector<std::string> todo;
  std::vector<std::size_t> todo_index;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    out[i].modality = m;
    out[i].source_hash = hash_text(inputs[i]);
    if (cache) {
      if (auto hit = cache->get(EmbeddingKey{bundle_hash, fp, m, out[i].source_hash})) {
        out[i].vector = std::move(*hit);
        continue;
      }
    }
    todo.push_back(inputs[i]);
    todo_index.push_back(i);
  }
  if (todo.empty()) return out;

  std::vector<Vector> raw;
  try {
    raw = bundle.encode_raw(m, todo);
  } catch (const Error& batch_error) {
    // Locate the offending input so the report names it.
    for (std::size_t j = 0; j < todo.size(); ++j) {
      try {
        bundle.encode_raw(m, std::span<const std::string>(&todo[j], 1));
      } catch (const Error& e) {
        fail(e.code(), std::string(to_string(m)) + " input " + std::to_string(todo_index[j]) + " ('" + todo[j] +
                           "'): " + e.what());
      }
    }
    throw;
  }
  for (std::size_t j = 0; j < todo.size(); ++j) {
    const auto i = todo_index[j];
    out[i].vector = unit_or_fail(raw[j], bundle.embed_dim(), bundle.id(), m, i);
    if (cache) cache->put(EmbeddingKey{bundle_hash, fp, m, out[i].source_hash}, out[i].vector);
  }
  return out;
}

}  // namespace detail

/// L2-normalized text embeddings, in input order; cache consulted first.
inline std::vector<Embedding> encode_text(EncoderBundle& bundle, std::span<const std::string> texts,
                                          EmbeddingCache* cache = nullptr) {
  return detail::encode(bundle, Modality::text, texts, cache);
}

inline std::vector<Embedding> encode_image(EncoderBundle& bundle, std::span<const std::string> images,
                                           EmbeddingCache* cache = nullptr) {
  return detail::encode(bundle, Modality::image, images, cache);
}

/// scale * <image, text_i> for each text, in order.
inline std::vector<double> alignment_scores(const Embedding& image, std::span<const Embedding> texts, double scale) {
  require(std::isfinite(scale) && scale > 0.0, ErrorCode::contract, "alignment_scores: scale must be positive");
  std::vector<double> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(scale * dot(image.vector, t.vector));
  return out;
}

struct ZeroShotPrediction {
  std::string answer;
  std::size_t index = 0;
  std::vector<std::pair<std::string, double>> table;  // (answer, score) in prompt order
};

/// First index of the maximum; ties resolve to the earliest prompt.
inline std::size_t argmax_first(std::span<const double> v) {
  require(!v.empty(), ErrorCode::contract, "argmax over an empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

inline ZeroShotPrediction predict_zero_shot(EncoderBundle& bundle, const std::string& image, const PromptSet& prompts,
                                            EmbeddingCache* cache = nullptr, std::optional<double> scale = {}) {
  require(!prompts.empty(), ErrorCode::contract, "predict_zero_shot: empty prompt set");
  const auto img = encode_image(bundle, std::span<const std::string>(&image, 1), cache);
  std::vector<std::string> texts;
  texts.reserve(prompts.size());
  for (const auto& e : prompts.entries) texts.push_back(e.prompt);
  const auto txt = encode_text(bundle, texts, cache);
  const auto scores = alignment_scores(img[0], txt, scale.value_or(bundle.logit_scale()));
  ZeroShotPrediction p;
  p.index = argmax_first(scores);
  p.answer = prompts.entries[p.index].answer;
  p.table.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) p.table.emplace_back(prompts.entries[i].answer, scores[i]);
  return p;
}

}  // namespace vlshot
