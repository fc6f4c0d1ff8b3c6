#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/binor/optimizer.hpp"
#include "vlshot/clip/embedding.hpp"
#include "vlshot/clip/scoring.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"
#include "vlshot/core/random.hpp"
#include "vlshot/dataset/types.hpp"
#include "vlshot/entailment/classifier.hpp"
#include "vlshot/entailment/fusion.hpp"
#include "vlshot/eval/metrics.hpp"

namespace vlshot {

struct GridPoint {
  double learning_rate = 1e-6;
  std::size_t batch_size = 32;
  double dropout = 0.0;
};

/// Learning rate {1e-6, 3e-6, 5e-6} x batch {32, 64, 128} x dropout {0, 0.1, 0.4}.
inline std::vector<GridPoint> default_entailment_grid() {
  std::vector<GridPoint> g;
  for (double lr : {1e-6, 3e-6, 5e-6})
    for (std::size_t bs : {32, 64, 128})
      for (double dr : {0.0, 0.1, 0.4}) g.push_back({lr, bs, dr});
  return g;
}

struct EntailmentOptions {
  std::vector<GridPoint> grid = default_entailment_grid();
  std::vector<std::size_t> hidden = {1024, 128};
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
};

enum class PremiseSource { image, text };

enum class Direction { text_to_image, image_to_text };

inline std::string_view to_string(Direction d) { return d == Direction::text_to_image ? "text->image" : "image->text"; }

inline Direction parse_direction(std::string_view s) {
  if (s == "text->image" || s == "text_to_image") return Direction::text_to_image;
  if (s == "image->text" || s == "image_to_text") return Direction::image_to_text;
  fail(ErrorCode::configuration, "unknown transfer direction '" + std::string(s) + "'");
}

enum class MaskMode { black_image, zero_embedding };

struct Premise {
  PremiseSource source = PremiseSource::text;
  std::string content;  // image ref or caption
};

inline Premise premise_of(const VeExample& ex, PremiseSource src) {
  if (src == PremiseSource::image) return {src, ex.premise_image_ref};
  require(!text::trim(ex.premise_caption).empty(), ErrorCode::configuration,
          "entailment pair " + ex.pair_id + " has no premise caption for text-mode use");
  return {src, ex.premise_caption};
}

/// Unit-norm premise embeddings, routed to the visual encoder for images and
/// the text encoder for captions.
inline std::vector<Vector> encode_premises(EncoderBundle& bundle, std::span<const Premise> premises,
                                           EmbeddingCache* cache) {
  std::vector<Vector> out(premises.size());
  for (auto src : {PremiseSource::image, PremiseSource::text}) {
    std::vector<std::string> inputs;
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < premises.size(); ++i)
      if (premises[i].source == src) {
        inputs.push_back(premises[i].content);
        idx.push_back(i);
      }
    if (inputs.empty()) continue;
    const auto emb = src == PremiseSource::image ? encode_image(bundle, inputs, cache) : encode_text(bundle, inputs, cache);
    for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = emb[j].vector;
  }
  return out;
}

inline std::vector<Vector> fused_features(EncoderBundle& bundle, std::span<const VeExample> examples,
                                          PremiseSource src, EmbeddingCache* cache,
                                          std::optional<MaskMode> mask = std::nullopt) {
  if (examples.empty()) return {};
  std::vector<Premise> premises;
  std::vector<std::string> hyps;
  for (const auto& ex : examples) {
    if (mask == MaskMode::black_image)
      premises.push_back({PremiseSource::image, std::string(kBlackImage)});
    else if (!mask)
      premises.push_back(premise_of(ex, src));
    hyps.push_back(ex.hypothesis);
  }
  std::vector<Vector> prem;
  if (mask == MaskMode::zero_embedding)
    prem.assign(examples.size(), Vector(bundle.embed_dim(), 0.0));
  else
    prem = encode_premises(bundle, premises, cache);
  const auto hyp = encode_text(bundle, hyps, cache);
  std::vector<Vector> out;
  out.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) out.push_back(fuse(prem[i], hyp[i].vector));
  return out;
}

inline std::vector<std::size_t> label_indices(std::span<const VeExample> examples) {
  std::vector<std::size_t> y;
  for (const auto& ex : examples) y.push_back(static_cast<std::size_t>(ex.label));
  return y;
}

inline double classifier_accuracy(const MlpClassifier& c, std::span<const Vector> xs, std::span<const std::size_t> ys) {
  if (xs.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) hit += c.predict(xs[i]) == ys[i];
  return double(hit) / double(xs.size());
}

/// One grid point: Adam on mean cross-entropy, shuffled minibatches.
inline MlpClassifier train_classifier(std::span<const Vector> xs, std::span<const std::size_t> ys, const GridPoint& gp,
                                      const EntailmentOptions& opts, std::uint64_t seed) {
  require(!xs.empty(), ErrorCode::configuration, "entailment training: no examples");
  require(gp.batch_size > 0 && gp.learning_rate > 0.0, ErrorCode::configuration, "entailment grid point is invalid");
  MlpClassifier clf(xs[0].size(), opts.hidden, 3, gp.dropout, seed);
  auto slots = clf.parameter_slots();
  std::vector<std::size_t> sizes;
  for (auto* s : slots) sizes.push_back(s->size());
  Adam adam(AdamConfig{gp.learning_rate, 0.9, 0.999, 1e-8, 0.0}, sizes);
  const std::vector<bool> active(slots.size(), true), decay(slots.size(), false);
  auto rng = make_rng(seed, 0x5eed);
  std::vector<std::size_t> order(xs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::vector<Vector> grads;
  for (std::size_t epoch = 0; epoch < opts.epochs; ++epoch) {
    shuffle_in_place(order, rng);
    for (std::size_t b = 0; b < order.size(); b += gp.batch_size) {
      const auto n = std::min(gp.batch_size, order.size() - b);
      std::vector<const Vector*> bx;
      std::vector<std::size_t> by;
      for (std::size_t i = b; i < b + n; ++i) {
        bx.push_back(&xs[order[i]]);
        by.push_back(ys[order[i]]);
      }
      const double loss = clf.loss_and_grads(bx, by, grads, gp.dropout > 0.0 ? &rng : nullptr);
      require(std::isfinite(loss), ErrorCode::non_finite_loss, "entailment training: non-finite loss");
      adam.step(slots, grads, active, decay);
    }
  }
  return clf;
}

struct GridResult {
  GridPoint point;
  double valid_accuracy = 0.0;
};

struct EntailmentModel {
  MlpClassifier classifier;
  GridPoint chosen;
  std::vector<GridResult> grid;
  PremiseSource trained_on = PremiseSource::text;
};

/// Trains one classifier per grid point on fused (premise, hypothesis)
/// embeddings and keeps the best by validation accuracy in the training
/// modality. Encoders stay frozen; a changed fingerprint is a contract error.
inline EntailmentModel train_entailment(std::span<const VeExample> train, std::span<const VeExample> valid,
                                        EncoderBundle& bundle, const EntailmentOptions& opts, PremiseSource src,
                                        EmbeddingCache* cache = nullptr) {
  require(!train.empty(), ErrorCode::configuration, "entailment training: empty training split");
  require(!opts.grid.empty(), ErrorCode::configuration, "entailment training: empty hyperparameter grid");
  const auto fp_before = bundle.fingerprint();
  const auto xs = fused_features(bundle, train, src, cache);
  const auto ys = label_indices(train);
  const auto vxs = valid.empty() ? xs : fused_features(bundle, valid, src, cache);
  const auto vys = valid.empty() ? ys : label_indices(valid);

  EntailmentModel best;
  best.trained_on = src;
  double best_acc = -1.0;
  for (std::size_t g = 0; g < opts.grid.size(); ++g) {
    auto clf = train_classifier(xs, ys, opts.grid[g], opts, mix64(opts.seed ^ (0x9e1d + g)));
    const double acc = classifier_accuracy(clf, vxs, vys);
    best.grid.push_back({opts.grid[g], acc});
    if (acc > best_acc) {
      best_acc = acc;
      best.classifier = std::move(clf);
      best.chosen = opts.grid[g];
    }
  }
  require(bundle.fingerprint() == fp_before, ErrorCode::contract, "entailment training modified encoder parameters");
  return best;
}

inline EntailmentModel train_text_entailment(std::span<const VeExample> train, std::span<const VeExample> valid,
                                             EncoderBundle& bundle, const EntailmentOptions& opts,
                                             EmbeddingCache* cache = nullptr) {
  return train_entailment(train, valid, bundle, opts, PremiseSource::text, cache);
}

inline EntailmentLabel predict_entailment(const MlpClassifier& clf, EncoderBundle& bundle, const Premise& premise,
                                          const std::string& hypothesis, EmbeddingCache* cache = nullptr) {
  const auto prem = encode_premises(bundle, std::span<const Premise>(&premise, 1), cache);
  const auto hyp = encode_text(bundle, std::span<const std::string>(&hypothesis, 1), cache);
  return kEntailmentLabels[clf.predict(fuse(prem[0], hyp[0].vector))];
}

inline std::vector<EntailmentLabel> predict_entailment_batch(const MlpClassifier& clf, EncoderBundle& bundle,
                                                             std::span<const VeExample> examples, PremiseSource src,
                                                             EmbeddingCache* cache = nullptr,
                                                             std::optional<MaskMode> mask = std::nullopt) {
  std::vector<EntailmentLabel> out;
  for (const auto& x : fused_features(bundle, examples, src, cache, mask)) out.push_back(kEntailmentLabels[clf.predict(x)]);
  return out;
}

inline std::vector<EntailmentLabel> gold_labels(std::span<const VeExample> examples) {
  std::vector<EntailmentLabel> out;
  for (const auto& ex : examples) out.push_back(ex.label);
  return out;
}

/// Accuracy with every premise replaced by the all-black image (or a zero
/// embedding) before fusion.
inline double masked_control(const MlpClassifier& clf, EncoderBundle& bundle, std::span<const VeExample> examples,
                             MaskMode mode = MaskMode::black_image, EmbeddingCache* cache = nullptr) {
  if (examples.empty()) return 0.0;
  const auto pred = predict_entailment_batch(clf, bundle, examples, PremiseSource::image, cache, mode);
  const auto gold = gold_labels(examples);
  return entailment_accuracy(pred, gold);
}

/// Share of the most frequent gold label.
inline double majority_rate(std::span<const VeExample> examples) {
  if (examples.empty()) return 0.0;
  std::array<std::size_t, 3> c{};
  for (const auto& ex : examples) ++c[static_cast<std::size_t>(ex.label)];
  return double(*std::max_element(c.begin(), c.end())) / double(examples.size());
}

using Confusion = std::array<std::array<std::size_t, 3>, 3>;  // [gold][predicted]

struct TransferReport {
  Direction direction = Direction::text_to_image;
  PremiseSource train_premise = PremiseSource::text;
  PremiseSource eval_premise = PremiseSource::image;
  double valid_accuracy = 0.0;
  double test_accuracy = 0.0;
  std::optional<double> control_accuracy;
  double majority = 0.0;
  Confusion confusion{};
  GridPoint chosen;
  std::vector<GridResult> grid;
};

inline Confusion confusion_matrix(std::span<const EntailmentLabel> pred, std::span<const EntailmentLabel> gold) {
  require(pred.size() == gold.size(), ErrorCode::contract, "confusion matrix: length mismatch");
  Confusion m{};
  for (std::size_t i = 0; i < pred.size(); ++i) ++m[static_cast<std::size_t>(gold[i])][static_cast<std::size_t>(pred[i])];
  return m;
}

/// Train in one premise modality, evaluate in the other. text->image trains
/// on captions and tests on images; image->text swaps the routing.
inline TransferReport run_transfer(Direction dir, std::span<const VeExample> train, std::span<const VeExample> valid,
                                   std::span<const VeExample> test, EncoderBundle& bundle,
                                   const EntailmentOptions& opts, std::optional<MaskMode> control,
                                   EmbeddingCache* cache = nullptr) {
  TransferReport r;
  r.direction = dir;
  r.train_premise = dir == Direction::text_to_image ? PremiseSource::text : PremiseSource::image;
  r.eval_premise = dir == Direction::text_to_image ? PremiseSource::image : PremiseSource::text;
  const auto model = train_entailment(train, valid, bundle, opts, r.train_premise, cache);
  r.chosen = model.chosen;
  r.grid = model.grid;
  if (!valid.empty())
    r.valid_accuracy =
        entailment_accuracy(predict_entailment_batch(model.classifier, bundle, valid, r.eval_premise, cache), gold_labels(valid));
  if (!test.empty()) {
    const auto pred = predict_entailment_batch(model.classifier, bundle, test, r.eval_premise, cache);
    const auto gold = gold_labels(test);
    r.test_accuracy = entailment_accuracy(pred, gold);
    r.confusion = confusion_matrix(pred, gold);
    r.majority = majority_rate(test);
    if (control) r.control_accuracy = masked_control(model.classifier, bundle, test, *control, cache);
  }
  return r;
}

inline nlohmann::json report_to_json(const TransferReport& r) {
  nlohmann::json grid = nlohmann::json::array();
  for (const auto& g : r.grid)
    grid.push_back({{"learning_rate", g.point.learning_rate},
                    {"batch_size", g.point.batch_size},
                    {"dropout", g.point.dropout},
                    {"valid_accuracy", g.valid_accuracy}});
  nlohmann::json j = {{"direction", to_string(r.direction)},
                      {"train_premise", r.train_premise == PremiseSource::text ? "text" : "image"},
                      {"eval_premise", r.eval_premise == PremiseSource::text ? "text" : "image"},
                      {"valid_accuracy", r.valid_accuracy},
                      {"test_accuracy", r.test_accuracy},
                      {"majority", r.majority},
                      {"confusion", r.confusion},
                      {"chosen", {{"learning_rate", r.chosen.learning_rate},
                                  {"batch_size", r.chosen.batch_size},
                                  {"dropout", r.chosen.dropout}}},
                      {"grid", grid}};
  j["control_accuracy"] = r.control_accuracy ? nlohmann::json(*r.control_accuracy) : nlohmann::json(nullptr);
  return j;
}

}  // namespace vlshot
