#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "vlshot/binor/checkpoint.hpp"
#include "vlshot/binor/optimizer.hpp"
#include "vlshot/binor/selection.hpp"
#include "vlshot/binor/training.hpp"
#include "vlshot/clip/layouts.hpp"
#include "vlshot/clip/mlp_backend.hpp"
#include "vlshot/filter/prompts.hpp"

using namespace vlshot;
namespace fs = std::filesystem;

namespace {

MlpDualEncoder toy(std::uint64_t seed = 0) { return MlpDualEncoder(MlpEncoderConfig{"toy", 4, 4, 4, seed, true}); }

const std::vector<std::string> kColors = {"red", "blue", "green", "yellow", "white", "black", "orange", "brown"};
const std::vector<std::string> kObjects = {"bus", "car", "dog", "cat", "ball", "kite",
                                           "boat", "bird", "chair", "cup", "hat", "shirt"};

PromptSet color_prompts(const std::string& object) {
  MaskedTemplate t{"The color of the " + object + " is [mask].", TemplateSource::parsing, std::nullopt, ""};
  FilteredAnswerSet set;
  set.k = kColors.size();
  for (std::size_t i = 0; i < kColors.size(); ++i) set.answers.push_back({kColors[i], i, 0.0});
  return assemble_prompts(t, set);
}

/// Colour questions whose images describe the object in words.
struct ColorWorld {
  std::vector<VqaExample> examples;
  PromptLookup prompts;
  QuestionTaxonomy taxonomy{std::vector<std::string>{"what color is the"}};

  ColorWorld() {
    std::size_t id = 0;
    for (const auto& o : kObjects) {
      for (const auto& c : kColors) {
        VqaExample ex;
        ex.question_id = std::to_string(id++);
        ex.image_ref = "text:a " + c + " " + o + " near a wall";
        ex.question = "What color is the " + o + "?";
        ex.question_type = "what color is the";
        ex.answer_type = AnswerType::other;
        ex.human_answers = std::vector<std::string>(10, c);
        ex.majority_answer = c;
        examples.push_back(ex);
        prompts[ex.question_id] = color_prompts(o);
      }
    }
  }

  std::vector<VqaExample> excluding(const FewShotPool& pool) const {
    std::set<std::string> used;
    for (const auto& [w, shots] : pool.ways)
      for (const auto& e : shots) used.insert(e.question_id);
    std::vector<VqaExample> out;
    for (const auto& e : examples)
      if (!used.count(e.question_id)) out.push_back(e);
    return out;
  }
};

std::vector<TrainingItem> items_for(const ColorWorld& w, std::size_t n) {
  std::vector<TrainingItem> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ex = w.examples[(i * 13) % w.examples.size()];
    const auto& ps = w.prompts.at(ex.question_id);
    std::size_t label = 0;
    while (ps.entries[label].answer != ex.majority_answer) ++label;
    out.push_back({ex.image_ref, &ps, label});
  }
  return out;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::contract;
}

}  // namespace

TEST(Selection, ToyCounts) {
  auto enc = toy();
  const auto binor = count_parameters(enc.parameters(), TuneMode::binor);
  EXPECT_EQ(binor.total, 48u);
  EXPECT_EQ(binor.selected, 16u);
  EXPECT_EQ(binor.binor(), 16u);
  EXPECT_EQ(count_parameters(enc.parameters(), TuneMode::bitfit).selected, 12u);
  EXPECT_EQ(count_parameters(enc.parameters(), TuneMode::full).selected, 48u);
}

TEST(Selection, ModesNest) {
  for (const auto& params : {toy().parameters(), clip_layout("RN101"), clip_layout("ViT-B/16")}) {
    std::set<std::string> sel[3];
    const TuneMode modes[3] = {TuneMode::bitfit, TuneMode::binor, TuneMode::full};
    for (int m = 0; m < 3; ++m)
      for (const auto& p : params)
        if (selects(modes[m], p.kind)) sel[m].insert(p.name);
    EXPECT_TRUE(std::includes(sel[1].begin(), sel[1].end(), sel[0].begin(), sel[0].end()));
    EXPECT_TRUE(std::includes(sel[2].begin(), sel[2].end(), sel[1].begin(), sel[1].end()));
    EXPECT_LT(sel[0].size(), sel[1].size());
    EXPECT_LT(sel[1].size(), sel[2].size());
  }
}

TEST(Selection, MarksBundleTrainableFlags) {
  auto enc = toy();
  const auto sel = select_trainable(enc, TuneMode::bitfit);
  for (const auto& p : enc.parameters()) EXPECT_EQ(p.trainable, sel.contains(p.name)) << p.name;
  EXPECT_EQ(sel.selected, (std::vector<std::string>{"proj_in.bias", "norm.bias", "proj_out.bias"}));
}

TEST(Selection, UntaggedParameterFreezesEverything) {
  const auto file = fs::temp_directory_path() / "vlshot_untagged.txt";
  std::ofstream(file) << "fc.weight 4,4\nfc.bias 4\nlogit_scale -\n";
  LayoutBundle b("listing", read_param_listing(file), 4);
  EXPECT_EQ(code_of([&] { select_trainable(b, TuneMode::binor); }), ErrorCode::tagging);
  for (const auto& p : b.parameters()) EXPECT_FALSE(p.trainable) << p.name;
  fs::remove(file);
}

TEST(MapLabels, WorkedExamples) {
  VqaExample ex;
  ex.majority_answer = "blue";
  ex.human_answers = std::vector<std::string>(10, "blue");
  MaskedTemplate t{"It is [mask].", TemplateSource::parsing, std::nullopt, ""};
  FilteredAnswerSet set;
  for (std::size_t i = 0; i < 200; ++i) set.answers.push_back({i == 7 ? "blue" : "a" + std::to_string(i), i, 0.0});
  std::vector<PromptSet> sets = {assemble_prompts(t, set)};
  std::vector<VqaExample> exs = {ex};
  auto m = map_labels(exs, sets, true);
  EXPECT_EQ(m.labels[0], 7u);
  EXPECT_EQ(m.injections, 0u);

  exs[0].majority_answer = "teal";
  m = map_labels(exs, sets, true);
  EXPECT_EQ(m.labels[0], 200u);
  EXPECT_EQ(sets[0].size(), 201u);
  EXPECT_EQ(sets[0].entries[200].prompt, "It is teal.");
  EXPECT_EQ(m.injections, 1u);

  exs[0].majority_answer = "magenta";
  m = map_labels(exs, sets, false);
  EXPECT_FALSE(m.labels[0].has_value());
  EXPECT_EQ(m.skipped, 1u);
  EXPECT_EQ(sets[0].size(), 201u);

  std::vector<PromptSet> yn = {assemble_prompts(YesNoPromptPair{"It is on", "It is not on"})};
  exs[0].majority_answer = "no";
  EXPECT_EQ(map_labels(exs, yn, true).labels[0], 1u);
}

TEST(Optimizer, FirstAdamStepMovesByLearningRate) {
  Vector p = {1.0, -2.0, 0.5};
  Adam adam(AdamConfig{0.1, 0.9, 0.999, 1e-8, 0.0}, {3});
  adam.step({&p}, {Vector{3.0, -0.2, 0.0}}, {true}, {true});
  EXPECT_NEAR(p[0], 0.9, 1e-6);
  EXPECT_NEAR(p[1], -1.9, 1e-6);
  EXPECT_EQ(p[2], 0.5);
}

TEST(Optimizer, ClipGlobalNorm) {
  std::vector<Vector> g = {{3.0, 0.0}, {4.0}, {100.0}};
  const double n = clip_grad_norm(g, {true, true, false}, 2.0);
  EXPECT_DOUBLE_EQ(n, 5.0);
  EXPECT_NEAR(std::hypot(g[0][0], g[1][0]), 2.0, 1e-6);
  EXPECT_EQ(g[2][0], 100.0);
}

TEST(Training, AnalyticGradientsMatchFiniteDifferences) {
  ColorWorld w;
  auto enc = toy(3);
  enc.set_logit_scale(5.0);
  const auto sel = select_trainable(enc, TuneMode::full);
  Trainer trainer(enc, sel, TrainConfig{});
  const auto batch = items_for(w, 4);
  std::vector<Vector> grads;
  double d_scale = 0;
  trainer.loss_and_grads(batch, grads, d_scale);
  const double h = 1e-6;
  double worst = 0.0;
  auto rel = [](double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6}); };
  for (std::size_t t = 0; t < enc.tensors().size(); ++t) {
    for (std::size_t i = 0; i < enc.tensors()[t].data.size(); ++i) {
      auto& x = enc.tensors()[t].data[i];
      const double saved = x;
      std::vector<Vector> tmp;
      double ds;
      x = saved + h;
      const double up = trainer.loss_and_grads(batch, tmp, ds);
      x = saved - h;
      const double down = trainer.loss_and_grads(batch, tmp, ds);
      x = saved;
      const double numeric = (up - down) / (2 * h);
      worst = std::max(worst, rel(grads[t][i], numeric));
      EXPECT_LT(rel(grads[t][i], numeric), 1e-4) << enc.tensors()[t].info.name << "[" << i << "]";
    }
  }
  std::vector<Vector> tmp;
  double ds;
  enc.set_logit_scale(5.0 + h);
  const double up = trainer.loss_and_grads(batch, tmp, ds);
  enc.set_logit_scale(5.0 - h);
  const double down = trainer.loss_and_grads(batch, tmp, ds);
  EXPECT_LT(rel(d_scale, (up - down) / (2 * h)), 1e-4);
  RecordProperty("worst_relative_error", std::to_string(worst));
}

TEST(Training, FrozenParametersBitwiseUnchangedOver100Steps) {
  ColorWorld w;
  for (auto mode : {TuneMode::binor, TuneMode::bitfit}) {
    auto enc = toy(5);
    const auto sel = select_trainable(enc, mode);
    const auto before = enc.tensors();
    TrainConfig cfg;
    cfg.learning_rate = 1e-2;
    Trainer trainer(enc, sel, cfg);
    const auto batch = items_for(w, 8);
    for (int s = 0; s < 100; ++s) trainer.step(batch);
    for (std::size_t t = 0; t < before.size(); ++t) {
      const auto& name = before[t].info.name;
      if (sel.contains(name))
        EXPECT_NE(enc.tensors()[t].data, before[t].data) << name;
      else
        EXPECT_EQ(std::memcmp(enc.tensors()[t].data.data(), before[t].data.data(), before[t].data.size() * sizeof(double)), 0)
            << name;
    }
  }
}

TEST(Training, SupportLossDecreasesOverThirtyEpochs) {
  ColorWorld w;
  MlpDualEncoder enc(MlpEncoderConfig{"mlp", 64, 32, 16, 1, true});
  const auto sel = select_trainable(enc, TuneMode::binor);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  Trainer trainer(enc, sel, cfg);
  const auto items = items_for(w, 16);
  std::vector<double> epoch_loss;
  for (int epoch = 0; epoch < 30; ++epoch) {
    double sum = 0;
    for (std::size_t b = 0; b < items.size(); b += 8) sum += trainer.step(std::span(items.data() + b, 8)).loss;
    epoch_loss.push_back(sum / 2);
  }
  for (std::size_t e = 1; e < epoch_loss.size(); ++e) EXPECT_LE(epoch_loss[e], epoch_loss[e - 1] + 0.05) << e;
  EXPECT_LT(epoch_loss.back(), 0.5 * epoch_loss.front());
}

TEST(Training, LogitScaleClampedAtMaximum) {
  auto enc = toy(2);
  const auto sel = select_trainable(enc, TuneMode::binor);
  TrainConfig cfg;
  cfg.learning_rate = 1e-2;
  Trainer trainer(enc, sel, cfg);
  enc.set_logit_scale(99.99);
  // image identical to the labelled prompt and a near-duplicate distractor,
  // so a larger scale lowers the loss with a non-vanishing gradient
  PromptSet ps;
  ps.entries = {{"a", "a red bus"}, {"b", "a red bus today"}};
  ps.source = YesNoPromptPair{"a red bus", "a red bus today"};
  const std::vector<TrainingItem> batch = {{"text:a red bus", &ps, 0}};
  for (int i = 0; i < 5; ++i) trainer.step(batch);
  EXPECT_EQ(enc.logit_scale(), 100.0);
}

TEST(Training, NonFiniteLossAbortsBeforeUpdate) {
  ColorWorld w;
  auto enc = toy(4);
  const auto sel = select_trainable(enc, TuneMode::binor);
  Trainer trainer(enc, sel, TrainConfig{});
  enc.tensor("proj_in.weight").data[0] = std::numeric_limits<double>::quiet_NaN();
  const auto before = enc.tensor("proj_in.bias").data;
  EXPECT_EQ(code_of([&] { trainer.step(items_for(w, 2)); }), ErrorCode::non_finite_loss);
  EXPECT_EQ(enc.tensor("proj_in.bias").data, before);
}

TEST(FewShot, OneShotRunsThirtyEpochs) {
  ColorWorld w;
  const auto pool = sample_pool(w.examples, w.taxonomy, 1, 3);
  auto enc = toy(1);
  TrainConfig cfg;
  cfg.seed = 3;
  const auto r = train_few_shot(enc, pool, w.prompts, cfg, TuneMode::binor);
  ASSERT_EQ(r.trace.epochs.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) {
    EXPECT_EQ(r.trace.epochs[i].epoch, i + 1);
    EXPECT_EQ(r.trace.epochs[i].steps, 1u);
    EXPECT_FALSE(r.trace.epochs[i].query_score.has_value());
  }
  EXPECT_EQ(r.best_epoch, 30u);
}

TEST(FewShot, SameSeedSameTrace) {
  ColorWorld w;
  const auto pool = sample_pool(w.examples, w.taxonomy, 4, 8);
  TrainConfig cfg;
  cfg.seed = 8;
  cfg.epochs = 5;
  cfg.learning_rate = 1e-2;
  auto a = toy(1), b = toy(1);
  const auto ra = train_few_shot(a, pool, w.prompts, cfg, TuneMode::binor);
  const auto rb = train_few_shot(b, pool, w.prompts, cfg, TuneMode::binor);
  EXPECT_EQ(trace_to_json(ra.trace).dump(), trace_to_json(rb.trace).dump());
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
}

TEST(FewShot, EmptyPoolIsConfigurationError) {
  ColorWorld w;
  FewShotPool empty;
  auto enc = toy();
  EXPECT_EQ(code_of([&] { train_few_shot(enc, empty, w.prompts, TrainConfig{}, TuneMode::binor); }),
            ErrorCode::configuration);
}

TEST(FewShot, FullFineTuningOverfitsThreeSupportExamples) {
  // K=4 with proportion 0.75 leaves 3 support examples per episode; held-out
  // questions measure generalization, averaged over seeds.
  ColorWorld w;
  double binor_sum = 0, full_sum = 0;
  const int seeds = 10;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto pool = sample_pool(w.examples, w.taxonomy, 4, seed);
    const auto held_out = w.excluding(pool);
    TrainConfig cfg;
    cfg.seed = seed;
    cfg.learning_rate = 1e-2;
    for (auto mode : {TuneMode::binor, TuneMode::full}) {
      MlpDualEncoder enc(MlpEncoderConfig{"mlp", 64, 32, 16, std::uint64_t(seed), true});
      train_few_shot(enc, pool, w.prompts, cfg, mode);
      (mode == TuneMode::binor ? binor_sum : full_sum) += mean_vqa_score(enc, held_out, w.prompts);
    }
  }
  EXPECT_LT(full_sum / seeds, binor_sum / seeds);
}

TEST(Checkpoint, RoundTripRestoresSelectedTensors) {
  ColorWorld w;
  const auto pool = sample_pool(w.examples, w.taxonomy, 4, 2);
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.learning_rate = 1e-2;
  auto trained = toy(6);
  const auto r = train_few_shot(trained, pool, w.prompts, cfg, TuneMode::binor);
  const auto file = fs::temp_directory_path() / "vlshot_ckpt_test.bin";
  const auto saved = save_checkpoint(file, trained, r.selection, cfg.fingerprint());
  EXPECT_EQ(saved.scalars, 16u);
  auto fresh = toy(6);
  EXPECT_NE(fresh.fingerprint(), trained.fingerprint());
  load_checkpoint(file, fresh, cfg.fingerprint());
  EXPECT_EQ(fresh.fingerprint(), trained.fingerprint());
  EXPECT_EQ(fresh.logit_scale(), trained.logit_scale());
  EXPECT_EQ(code_of([&] { load_checkpoint(file, fresh, cfg.fingerprint() + 1); }), ErrorCode::load);
  fs::remove(file);
}

TEST(Config, FingerprintTracksFields) {
  TrainConfig a, b;
  EXPECT_EQ(a.fingerprint(), b.fingerprint());
  b.learning_rate = 3e-5;
  EXPECT_NE(a.fingerprint(), b.fingerprint());
  TrainConfig bad;
  bad.batch_size = 0;
  EXPECT_THROW(bad.validate(), Error);
}
