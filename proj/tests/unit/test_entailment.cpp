#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <set>
#include <tuple>

#include "vlshot/clip/mlp_backend.hpp"
#include "vlshot/core/random.hpp"
#include "vlshot/entailment/classifier.hpp"
#include "vlshot/entailment/fusion.hpp"
#include "vlshot/entailment/synthetic.hpp"
#include "vlshot/entailment/transfer.hpp"

using namespace vlshot;

namespace {

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof(double)) == 0; }

EntailmentOptions small_options() {
  EntailmentOptions o;
  o.grid = {{1e-3, 32, 0.0}, {3e-3, 32, 0.1}};
  o.hidden = {64, 32};
  o.epochs = 20;
  o.seed = 4;
  return o;
}

}  // namespace

TEST(Fusion, WorkedExample) {
  const Vector a = {1.0, 2.0}, b = {3.0, -1.0};
  EXPECT_EQ(fuse(a, b), (Vector{1.0, 2.0, 3.0, -1.0, 4.0, 1.0, -2.0, 3.0, 3.0, -2.0}));
}

TEST(Fusion, DimensionMismatchIsContractError) {
  const Vector a = {1.0, 2.0}, b = {3.0};
  try {
    fuse(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::contract);
  }
}

TEST(Fusion, BlockRecoveryOnRandomPairs) {
  auto rng = make_rng(31);
  for (std::size_t d : {2u, 512u}) {
    for (int trial = 0; trial < 200; ++trial) {
      Vector v1(d), v2(d);
      // dyadic values keep sums and halvings exact
      for (auto& x : v1) x = double(std::int64_t(uniform_below(rng, 1 << 20)) - (1 << 19)) / 1024.0;
      for (auto& x : v2) x = double(std::int64_t(uniform_below(rng, 1 << 20)) - (1 << 19)) / 1024.0;
      const auto f = fuse(v1, v2);
      ASSERT_EQ(f.size(), 5 * d);
      for (std::size_t i = 0; i < d; ++i) {
        EXPECT_TRUE(bit_equal(f[i], v1[i]));
        EXPECT_TRUE(bit_equal(f[d + i], v2[i]));
        EXPECT_TRUE(bit_equal((f[2 * d + i] + f[3 * d + i]) / 2.0, v1[i]));
        EXPECT_TRUE(bit_equal((f[2 * d + i] - f[3 * d + i]) / 2.0, v2[i]));
        EXPECT_TRUE(bit_equal(f[4 * d + i], v1[i] * v2[i]));
      }
    }
  }
}

TEST(Classifier, GradientsMatchFiniteDifferences) {
  MlpClassifier clf(6, {5, 4}, 3, 0.0, 2);
  auto rng = make_rng(5);
  std::vector<Vector> xs(4, Vector(6));
  for (auto& x : xs)
    for (auto& v : x) v = standard_normal(rng);
  std::vector<const Vector*> px;
  for (const auto& x : xs) px.push_back(&x);
  const std::vector<std::size_t> ys = {0, 1, 2, 1};
  auto slots = clf.parameter_slots();
  // zero-initialised biases put dead units exactly on the ReLU kink
  for (std::size_t s = 1; s < slots.size(); s += 2)
    for (auto& b : *slots[s]) b = 0.3 + 0.1 * standard_normal(rng);
  std::vector<Vector> grads, tmp;
  clf.loss_and_grads(px, ys, grads, nullptr);
  const double h = 1e-6;
  for (std::size_t s = 0; s < slots.size(); ++s) {
    for (std::size_t i = 0; i < slots[s]->size(); ++i) {
      double& w = (*slots[s])[i];
      const double saved = w;
      w = saved + h;
      const double up = clf.loss_and_grads(px, ys, tmp, nullptr);
      w = saved - h;
      const double down = clf.loss_and_grads(px, ys, tmp, nullptr);
      w = saved;
      const double numeric = (up - down) / (2 * h);
      EXPECT_NEAR(grads[s][i], numeric, 1e-6 * std::max(1.0, std::abs(numeric))) << "slot " << s << " index " << i;
    }
  }
}

TEST(Classifier, JsonRoundTrip) {
  MlpClassifier clf(10, {8}, 3, 0.1, 7);
  const auto back = MlpClassifier::from_json(clf.to_json());
  const Vector x = {0.1, -0.2, 0.3, 0.0, 1.0, 0.5, -1.0, 2.0, 0.0, 0.25};
  EXPECT_EQ(back.logits(x), clf.logits(x));
}

TEST(Grid, DefaultHas27Points) {
  const auto g = default_entailment_grid();
  EXPECT_EQ(g.size(), 27u);
  std::set<std::tuple<double, std::size_t, double>> distinct;
  for (const auto& p : g) distinct.insert({p.learning_rate, p.batch_size, p.dropout});
  EXPECT_EQ(distinct.size(), 27u);
}

TEST(Premises, RoutedByModality) {
  TableEncoder enc("t", 2);
  enc.set_image("cat.jpg", {1.0, 0.0});
  enc.set_text("A cat.", {0.0, 1.0});
  const std::vector<Premise> ps = {{PremiseSource::image, "cat.jpg"}, {PremiseSource::text, "A cat."}};
  const auto e = encode_premises(enc, ps, nullptr);
  EXPECT_EQ(e[0], (Vector{1.0, 0.0}));
  EXPECT_EQ(e[1], (Vector{0.0, 1.0}));
  // an image ref is never sent to the text encoder
  const std::vector<Premise> wrong = {{PremiseSource::text, "cat.jpg"}};
  EXPECT_THROW(encode_premises(enc, wrong, nullptr), Error);
}

TEST(Premises, MissingCaptionIsConfigurationError) {
  VeExample ex{"p1", "img.jpg", "", "A dog runs.", EntailmentLabel::neutral};
  try {
    premise_of(ex, PremiseSource::text);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::configuration);
  }
  EXPECT_EQ(premise_of(ex, PremiseSource::image).content, "img.jpg");
}

TEST(Transfer, SyntheticTextToImage) {
  auto f = make_aligned_entailment_fixture(120, 20, 40, 16, 9);
  const auto fp = f.encoder->fingerprint();
  const auto r = run_transfer(Direction::text_to_image, f.train, f.valid, f.test, *f.encoder, small_options(),
                              MaskMode::black_image);
  EXPECT_GE(r.test_accuracy, 0.95);
  ASSERT_TRUE(r.control_accuracy.has_value());
  EXPECT_NEAR(*r.control_accuracy, r.majority, 0.02);
  EXPECT_NEAR(r.majority, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(r.grid.size(), 2u);
  EXPECT_EQ(f.encoder->fingerprint(), fp);
  std::size_t total = 0;
  for (const auto& row : r.confusion)
    for (auto c : row) total += c;
  EXPECT_EQ(total, f.test.size());
}

TEST(Transfer, ImageToTextAndZeroEmbeddingControl) {
  auto f = make_aligned_entailment_fixture(120, 20, 40, 16, 10);
  const auto r = run_transfer(Direction::image_to_text, f.train, f.valid, f.test, *f.encoder, small_options(),
                              MaskMode::zero_embedding);
  EXPECT_EQ(r.train_premise, PremiseSource::image);
  EXPECT_EQ(r.eval_premise, PremiseSource::text);
  EXPECT_GE(r.test_accuracy, 0.95);
  EXPECT_NEAR(*r.control_accuracy, r.majority, 0.02);
}

TEST(Transfer, GridYieldsOneResultPerPoint) {
  auto f = make_aligned_entailment_fixture(10, 4, 0, 4, 1);
  auto opts = small_options();
  opts.grid = default_entailment_grid();
  opts.hidden = {8};
  opts.epochs = 1;
  const auto m = train_text_entailment(f.train, f.valid, *f.encoder, opts);
  EXPECT_EQ(m.grid.size(), 27u);
  double best = 0;
  for (const auto& g : m.grid) best = std::max(best, g.valid_accuracy);
  for (const auto& g : m.grid)
    if (g.point.learning_rate == m.chosen.learning_rate && g.point.batch_size == m.chosen.batch_size &&
        g.point.dropout == m.chosen.dropout)
      EXPECT_EQ(g.valid_accuracy, best);
}

TEST(Transfer, BatchPredictionEqualsSingle) {
  auto f = make_aligned_entailment_fixture(30, 5, 10, 8, 2);
  const auto m = train_text_entailment(f.train, f.valid, *f.encoder, small_options());
  const auto batch = predict_entailment_batch(m.classifier, *f.encoder, f.test, PremiseSource::image);
  for (std::size_t i = 0; i < f.test.size(); ++i)
    EXPECT_EQ(batch[i], predict_entailment(m.classifier, *f.encoder, premise_of(f.test[i], PremiseSource::image),
                                           f.test[i].hypothesis));
}

TEST(Transfer, MaskingIsIdempotent) {
  auto f = make_aligned_entailment_fixture(30, 5, 10, 8, 3);
  const auto m = train_text_entailment(f.train, f.valid, *f.encoder, small_options());
  for (auto mode : {MaskMode::black_image, MaskMode::zero_embedding}) {
    const auto a = fused_features(*f.encoder, f.test, PremiseSource::image, nullptr, mode);
    const auto b = fused_features(*f.encoder, f.test, PremiseSource::image, nullptr, mode);
    EXPECT_EQ(a, b);
    EXPECT_EQ(masked_control(m.classifier, *f.encoder, f.test, mode), masked_control(m.classifier, *f.encoder, f.test, mode));
  }
}

TEST(Transfer, FrozenMlpEncoderFingerprintUnchanged) {
  MlpDualEncoder enc;
  std::vector<VeExample> train;
  const char* labels[] = {"entailment", "neutral", "contradiction"};
  for (int i = 0; i < 12; ++i)
    train.push_back({"p" + std::to_string(i), "img" + std::to_string(i), "a dog number " + std::to_string(i),
                     std::string("a dog ") + labels[i % 3], kEntailmentLabels[i % 3]});
  const auto fp = enc.fingerprint();
  auto opts = small_options();
  opts.epochs = 2;
  train_text_entailment(train, {}, enc, opts);
  EXPECT_EQ(enc.fingerprint(), fp);
}

TEST(Transfer, DirectionNames) {
  EXPECT_EQ(parse_direction("text->image"), Direction::text_to_image);
  EXPECT_EQ(parse_direction("image_to_text"), Direction::image_to_text);
  EXPECT_THROW(parse_direction("sideways"), Error);
}

TEST(Transfer, ReportJsonCarriesFields) {
  TransferReport r;
  r.test_accuracy = 0.5;
  const auto j = report_to_json(r);
  EXPECT_EQ(j.at("direction"), "text->image");
  EXPECT_TRUE(j.at("control_accuracy").is_null());
  EXPECT_EQ(j.at("confusion").size(), 3u);
}
