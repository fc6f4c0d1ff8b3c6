#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vlshot/binor/optimizer.hpp"
#include "vlshot/binor/selection.hpp"
#include "vlshot/clip/differentiable.hpp"
#include "vlshot/clip/scoring.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"
#include "vlshot/core/random.hpp"
#include "vlshot/dataset/normalize.hpp"
#include "vlshot/dataset/sampling.hpp"
#include "vlshot/eval/metrics.hpp"
#include "vlshot/filter/prompts.hpp"

namespace vlshot {

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double learning_rate = 2e-5;
  double adam_epsilon = 1e-8;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double grad_clip = 2.0;
  double weight_decay = 0.001;
  double init_temperature = 0.07;
  double max_logit_scale = 100.0;
  std::size_t filtered_answers_k = 200;
  std::uint64_t seed = 0;
  std::size_t ways_per_epoch = 0;  // C; 0 uses every populated way
  double proportion = 0.75;
  bool train_logit_scale = true;
  bool inject_gold = true;

  void validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    require(epochs > 0 && batch_size > 0 && filtered_answers_k > 0, ErrorCode::configuration,
            "train config: epochs, batch size and k must be positive");
    require(positive(learning_rate) && positive(adam_epsilon) && positive(grad_clip) && weight_decay >= 0.0,
            ErrorCode::configuration, "train config: learning rate, epsilon and clip must be positive");
    require(beta1 > 0.0 && beta1 < 1.0 && beta2 > 0.0 && beta2 < 1.0, ErrorCode::configuration,
            "train config: Adam betas must lie in (0, 1)");
    require(positive(init_temperature) && positive(max_logit_scale) && 1.0 / init_temperature <= max_logit_scale,
            ErrorCode::configuration, "train config: initial scale 1/temperature must not exceed the maximum");
    require(proportion > 0.0 && proportion < 1.0, ErrorCode::configuration,
            "train config: support proportion must lie in (0, 1)");
  }

  std::uint64_t fingerprint() const {
    Fnv1a h;
    h.u64(epochs).u64(batch_size).f64(learning_rate).f64(adam_epsilon).f64(beta1).f64(beta2).f64(grad_clip);
    h.f64(weight_decay).f64(init_temperature).f64(max_logit_scale).u64(filtered_answers_k).u64(seed);
    h.u64(ways_per_epoch).f64(proportion).u64(train_logit_scale).u64(inject_gold);
    return h.value();
  }
};

struct LabelMap {
  std::vector<std::optional<std::size_t>> labels;  // nullopt: skip the example
  std::size_t injections = 0;
  std::size_t skipped = 0;
};

/// Label = position of the gold answer's prompt. A gold answer missing from
/// the candidate set is appended when injection is on.
inline LabelMap map_labels(std::span<const VqaExample> examples, std::span<PromptSet> prompt_sets, bool inject) {
  require(examples.size() == prompt_sets.size(), ErrorCode::contract, "map_labels: one prompt set per example");
  LabelMap out;
  for (std::size_t e = 0; e < examples.size(); ++e) {
    const auto gold = normalize_answer(examples[e].majority_answer);
    auto& set = prompt_sets[e];
    std::optional<std::size_t> label;
    for (std::size_t i = 0; i < set.entries.size(); ++i) {
      if (normalize_answer(set.entries[i].answer) == gold) {
        label = i;
        break;
      }
    }
    if (!label && inject) {
      if (const auto* tmpl = std::get_if<MaskedTemplate>(&set.source)) {
        set.entries.push_back({examples[e].majority_answer, fill_template(*tmpl, examples[e].majority_answer)});
        label = set.entries.size() - 1;
        ++out.injections;
      }
    }
    if (!label) ++out.skipped;
    out.labels.push_back(label);
  }
  return out;
}

struct TrainingItem {
  std::string image;
  const PromptSet* prompts = nullptr;
  std::size_t label = 0;
};

struct StepResult {
  double loss = 0.0;
  double grad_norm = 0.0;
  double update_norm = 0.0;
};

/// Holds the optimizer state for one bundle and one selection.
class Trainer {
 public:
  Trainer(DifferentiableBundle& bundle, TrainableSelection selection, TrainConfig cfg)
      : bundle_(bundle), sel_(std::move(selection)), cfg_(cfg),
        adam_(AdamConfig{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon, cfg.weight_decay}, sizes(bundle)) {
    cfg_.validate();
    bundle_.set_max_logit_scale(cfg_.max_logit_scale);
    for (const auto& t : bundle_.tensors()) {
      const bool on = sel_.contains(t.info.name);
      active_.push_back(on);
      decay_.push_back(on);
    }
    active_.push_back(cfg_.train_logit_scale);
    decay_.push_back(false);
  }

  const TrainableSelection& selection() const { return sel_; }
  const TrainConfig& config() const { return cfg_; }
  DifferentiableBundle& bundle() { return bundle_; }

  /// Mean cross-entropy over the batch of scale * cosine logits, one
  /// gradient-clipped Adam update of the selected parameters.
  StepResult step(std::span<const TrainingItem> batch) {
    require(!batch.empty(), ErrorCode::contract, "training step: empty batch");
    require(batch.size() <= cfg_.batch_size, ErrorCode::contract, "training step: batch exceeds configured size");
    auto grads = bundle_.zero_grads();
    const double s = bundle_.logit_scale();
    double d_scale = 0.0;
    const auto loss = forward_backward(batch, grads, d_scale);
    if (!std::isfinite(loss)) {
      bundle_.clear_tape();
      fail(ErrorCode::non_finite_loss, "non-finite loss " + std::to_string(loss) + " at optimizer step " +
                                           std::to_string(adam_.steps() + 1) + " (logit scale " +
                                           std::to_string(s) + ", batch of " + std::to_string(batch.size()) + ")");
    }
    grads.push_back(Vector{d_scale * s});  // d loss / d log(scale)
    StepResult r;
    r.loss = loss;
    r.grad_norm = clip_grad_norm(grads, active_, cfg_.grad_clip);

    auto& ts = bundle_.tensors();
    std::vector<Vector> before;
    std::vector<Vector*> slots;
    for (auto& t : ts) slots.push_back(&t.data);
    Vector log_scale{std::log(s)};
    slots.push_back(&log_scale);
    for (std::size_t i = 0; i < slots.size(); ++i) before.push_back(active_[i] ? *slots[i] : Vector{});
    adam_.step(slots, grads, active_, decay_);
    double sq = 0.0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (!active_[i]) continue;
      for (std::size_t j = 0; j < slots[i]->size(); ++j) {
        const double d = (*slots[i])[j] - before[i][j];
        sq += d * d;
      }
    }
    r.update_norm = std::sqrt(sq);
    if (cfg_.train_logit_scale) bundle_.set_logit_scale(std::exp(log_scale[0]));
    bundle_.clear_tape();
    return r;
  }

  /// Loss and gradients without an update (gradient checks).
  double loss_and_grads(std::span<const TrainingItem> batch, std::vector<Vector>& grads, double& d_scale) {
    grads = bundle_.zero_grads();
    d_scale = 0.0;
    const auto loss = forward_backward(batch, grads, d_scale);
    bundle_.clear_tape();
    return loss;
  }

 private:
  static std::vector<std::size_t> sizes(const DifferentiableBundle& b) {
    std::vector<std::size_t> out;
    for (const auto& t : b.tensors()) out.push_back(t.data.size());
    out.push_back(1);
    return out;
  }

  struct Unit {
    std::size_t slot;
    Vector e;
    double norm;
  };

  Unit encode(Modality m, const std::string& input) {
    Vector raw;
    const auto slot = bundle_.forward(m, input, raw);
    const double n = l2_norm(raw);
    require(n > 0.0 && std::isfinite(n), ErrorCode::non_finite_loss,
            "zero or non-finite embedding for " + std::string(to_string(m)) + " '" + input + "'");
    Vector e(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) e[i] = raw[i] / n;
    return {slot, std::move(e), n};
  }

  void backprop_unit(const Unit& u, const Vector& de, std::vector<Vector>& grads) {
    const double proj = dot(u.e, de);
    Vector draw(de.size());
    for (std::size_t i = 0; i < de.size(); ++i) draw[i] = (de[i] - u.e[i] * proj) / u.norm;
    bundle_.backward(u.slot, draw, grads);
  }

  double forward_backward(std::span<const TrainingItem> batch, std::vector<Vector>& grads, double& d_scale) {
    const double s = bundle_.logit_scale();
    const double inv_b = 1.0 / double(batch.size());
    double total = 0.0;
    for (const auto& item : batch) {
      require(item.prompts && !item.prompts->empty(), ErrorCode::contract, "training item without prompts");
      require(item.label < item.prompts->size(), ErrorCode::contract, "training label out of range");
      const auto img = encode(Modality::image, item.image);
      std::vector<Unit> txt;
      txt.reserve(item.prompts->size());
      for (const auto& p : item.prompts->entries) txt.push_back(encode(Modality::text, p.prompt));
      std::vector<double> cos(txt.size()), logits(txt.size());
      double mx = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < txt.size(); ++j) {
        cos[j] = dot(img.e, txt[j].e);
        logits[j] = s * cos[j];
        mx = std::max(mx, logits[j]);
      }
      double z = 0.0;
      for (double l : logits) z += std::exp(l - mx);
      const double lse = mx + std::log(z);
      total += lse - logits[item.label];

      Vector de_img(img.e.size(), 0.0);
      for (std::size_t j = 0; j < txt.size(); ++j) {
        const double p = std::exp(logits[j] - lse);
        const double dl = (p - (j == item.label ? 1.0 : 0.0)) * inv_b;
        d_scale += dl * cos[j];
        Vector de_txt(img.e.size());
        for (std::size_t k = 0; k < de_txt.size(); ++k) {
          de_img[k] += dl * s * txt[j].e[k];
          de_txt[k] = dl * s * img.e[k];
        }
        backprop_unit(txt[j], de_txt, grads);
      }
      backprop_unit(img, de_img, grads);
    }
    return total * inv_b;
  }

  DifferentiableBundle& bundle_;
  TrainableSelection sel_;
  TrainConfig cfg_;
  Adam adam_;
  std::vector<bool> active_, decay_;
};

inline StepResult training_step(Trainer& trainer, std::span<const TrainingItem> batch) { return trainer.step(batch); }

struct EpochRecord {
  std::size_t epoch = 0;
  double support_loss = 0.0;
  std::optional<double> query_score;  // mean vqa score; absent when the query set is empty
  double logit_scale = 0.0;
  double update_norm = 0.0;
  std::size_t steps = 0;
  std::size_t injections = 0;
  std::size_t skipped = 0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  TrainableSelection selection;
  TrainTrace trace;
  std::size_t best_epoch = 0;
  std::optional<double> best_query_score;
};

/// Prompt sets by question id.
using PromptLookup = std::map<std::string, PromptSet>;

inline double mean_vqa_score(EncoderBundle& bundle, std::span<const VqaExample> examples, const PromptLookup& prompts) {
  require(!examples.empty(), ErrorCode::contract, "mean_vqa_score: no examples");
  double sum = 0.0;
  for (const auto& ex : examples) {
    auto it = prompts.find(ex.question_id);
    require(it != prompts.end(), ErrorCode::contract, "no prompt set for question " + ex.question_id);
    const auto pred = predict_zero_shot(bundle, ex.image_ref, it->second);
    sum += vqa_score(pred.answer, ex.human_answers);
  }
  return sum / double(examples.size());
}

/// Episodic few-shot training. Each epoch samples an episode, takes
/// minibatch steps over the shuffled support set and scores the query set;
/// the parameters of the best-scoring epoch are restored at the end (the
/// last epoch when no query set was ever available).
inline TrainResult train_few_shot(DifferentiableBundle& bundle, const FewShotPool& pool, const PromptLookup& prompts,
                                  const TrainConfig& cfg, TuneMode mode) {
  cfg.validate();
  require(!pool.populated_ways().empty(), ErrorCode::configuration, "few-shot training: empty support set (pool has no examples)");
  TrainResult result;
  result.selection = select_trainable(bundle, mode);
  bundle.set_logit_scale(1.0 / cfg.init_temperature);
  Trainer trainer(bundle, result.selection, cfg);

  std::vector<Vector> best_state;
  double best_scale = bundle.logit_scale();
  auto snapshot = [&] {
    best_state.clear();
    for (const auto& t : bundle.tensors()) best_state.push_back(t.data);
    best_scale = bundle.logit_scale();
  };

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto ep = split_support_query(pool, cfg.ways_per_epoch, cfg.proportion, mix64(cfg.seed + epoch));
    require(!ep.support.empty(), ErrorCode::configuration, "few-shot training: empty support set in epoch " +
                                                               std::to_string(epoch + 1));
    std::vector<PromptSet> sets;
    sets.reserve(ep.support.size());
    for (const auto& ex : ep.support) {
      auto it = prompts.find(ex.question_id);
      require(it != prompts.end(), ErrorCode::contract, "no prompt set for question " + ex.question_id);
      sets.push_back(it->second);
    }
    const auto labels = map_labels(ep.support, sets, cfg.inject_gold);
    std::vector<TrainingItem> items;
    for (std::size_t i = 0; i < ep.support.size(); ++i)
      if (labels.labels[i]) items.push_back({ep.support[i].image_ref, &sets[i], *labels.labels[i]});
    auto rng = make_rng(cfg.seed, 0x7a11 + epoch);
    shuffle_in_place(items, rng);

    EpochRecord rec;
    rec.epoch = epoch + 1;
    rec.injections = labels.injections;
    rec.skipped = labels.skipped;
    double loss_sum = 0.0, upd_sq = 0.0;
    for (std::size_t b = 0; b < items.size(); b += cfg.batch_size) {
      const auto n = std::min(cfg.batch_size, items.size() - b);
      const auto r = trainer.step(std::span<const TrainingItem>(items.data() + b, n));
      loss_sum += r.loss;
      upd_sq += r.update_norm * r.update_norm;
      ++rec.steps;
    }
    rec.support_loss = rec.steps ? loss_sum / double(rec.steps) : 0.0;
    rec.update_norm = std::sqrt(upd_sq);
    rec.logit_scale = bundle.logit_scale();
    if (!ep.query.empty()) rec.query_score = mean_vqa_score(bundle, ep.query, prompts);
    if (rec.query_score && (!result.best_query_score || *rec.query_score > *result.best_query_score)) {
      result.best_query_score = rec.query_score;
      result.best_epoch = rec.epoch;
      snapshot();
    }
    result.trace.epochs.push_back(rec);
  }
  if (result.best_query_score) {
    auto& ts = bundle.tensors();
    for (std::size_t i = 0; i < ts.size(); ++i) ts[i].data = best_state[i];
    bundle.set_logit_scale(best_scale);
  } else {
    result.best_epoch = cfg.epochs;
  }
  return result;
}

}  // namespace vlshot
