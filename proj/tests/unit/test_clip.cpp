#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "vlshot/binor/selection.hpp"
#include "vlshot/clip/embedding.hpp"
#include "vlshot/clip/layouts.hpp"
#include "vlshot/clip/mlp_backend.hpp"
#include "vlshot/clip/params.hpp"
#include "vlshot/clip/scoring.hpp"
#include "vlshot/clip/table_backend.hpp"
#include "vlshot/core/random.hpp"
#include "vlshot/filter/prompts.hpp"

using namespace vlshot;
namespace fs = std::filesystem;

namespace {

Vector basis(std::size_t dim, std::size_t i, double scale = 1.0) {
  Vector v(dim, 0.0);
  v[i] = scale;
  return v;
}

PromptSet prompts_of(const std::vector<std::pair<std::string, std::string>>& entries) {
  PromptSet ps;
  for (const auto& [a, p] : entries) ps.entries.push_back({a, p});
  ps.source = MaskedTemplate{"x [mask]", TemplateSource::parsing, std::nullopt, ""};
  return ps;
}

Embedding emb(Vector v) { return Embedding{normalized(v), Modality::text, 0}; }

}  // namespace

TEST(Encode, EmbeddingsAreUnitNorm) {
  MlpDualEncoder enc;
  const std::vector<std::string> texts = {"a red bus", "two dogs on grass", "The fence is white."};
  for (const auto& e : encode_text(enc, texts)) EXPECT_NEAR(l2_norm(e.vector), 1.0, 1e-12);
  const std::vector<std::string> images = {"img-1", "text:a red bus", std::string(kBlackImage)};
  for (const auto& e : encode_image(enc, images)) {
    EXPECT_NEAR(l2_norm(e.vector), 1.0, 1e-12);
    EXPECT_EQ(e.vector.size(), enc.embed_dim());
  }
}

TEST(Encode, CacheHitIsBitIdenticalAndSkipsEncoder) {
  MlpDualEncoder enc;
  EmbeddingCache cache;
  const std::vector<std::string> texts = {"a red bus", "a blue bus"};
  const auto first = encode_text(enc, texts, &cache);
  const auto calls = enc.encode_calls();
  const auto second = encode_text(enc, texts, &cache);
  EXPECT_EQ(enc.encode_calls(), calls);
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(first[i].vector, second[i].vector);
  EXPECT_EQ(cache.hits(), 2u);
}

TEST(Encode, ParameterChangeInvalidatesCache) {
  MlpDualEncoder enc;
  EmbeddingCache cache;
  const std::vector<std::string> texts = {"a red bus"};
  const auto before = encode_text(enc, texts, &cache);
  enc.tensor("proj_out.bias").data[0] += 0.5;
  const auto calls = enc.encode_calls();
  const auto after = encode_text(enc, texts, &cache);
  EXPECT_EQ(enc.encode_calls(), calls + 1);
  EXPECT_NE(before[0].vector, after[0].vector);
}

TEST(Encode, PersistentCacheRoundTrip) {
  const auto file = fs::temp_directory_path() / "vlshot_embed_cache_test.bin";
  fs::remove(file);
  MlpDualEncoder enc;
  const std::vector<std::string> texts = {"a red bus", "two dogs"};
  std::vector<Embedding> first;
  {
    EmbeddingCache cache(file);
    first = encode_text(enc, texts, &cache);
    cache.save();
  }
  EmbeddingCache reopened(file);
  EXPECT_EQ(reopened.size(), 2u);
  MlpDualEncoder same;
  const auto calls = same.encode_calls();
  const auto second = encode_text(same, texts, &reopened);
  EXPECT_EQ(same.encode_calls(), calls);
  for (std::size_t i = 0; i < texts.size(); ++i) EXPECT_EQ(first[i].vector, second[i].vector);
  fs::remove(file);
}

TEST(Encode, CorruptCacheFileIsLoadError) {
  const auto file = fs::temp_directory_path() / "vlshot_embed_cache_bad.bin";
  std::ofstream(file) << "NOTMAGIC";
  try {
    EmbeddingCache cache(file);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::load);
  }
  fs::remove(file);
}

TEST(Encode, UnknownInputNamesIndex) {
  TableEncoder enc("table", 3);
  enc.set_text("known", basis(3, 0));
  const std::vector<std::string> texts = {"known", "known", "missing"};
  try {
    encode_text(enc, texts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::adapter);
    EXPECT_NE(std::string(e.what()).find("input 2"), std::string::npos);
  }
}

TEST(Encode, ZeroVectorIsAdapterError) {
  TableEncoder enc("table", 3);
  enc.set_text("zero", Vector(3, 0.0));
  const std::vector<std::string> texts = {"zero"};
  EXPECT_THROW(encode_text(enc, texts), Error);
}

TEST(Alignment, BasisVectorsPassThrough) {
  TableEncoder enc("table", 4);
  enc.set_image("img", basis(4, 1, 3.0));
  for (std::size_t i = 0; i < 4; ++i) enc.set_text("t" + std::to_string(i), basis(4, i, 2.0));
  const std::vector<std::string> images = {"img"};
  const std::vector<std::string> texts = {"t0", "t1", "t2", "t3"};
  const auto img = encode_image(enc, images);
  const auto txt = encode_text(enc, texts);
  EXPECT_EQ(alignment_scores(img[0], txt, 100.0), (std::vector<double>{0.0, 100.0, 0.0, 0.0}));
}

TEST(Alignment, WorkedExample) {
  const auto img = emb({3.0, 4.0});
  const std::vector<Embedding> txt = {emb({1.0, 0.0}), emb({0.0, 1.0}), emb({-3.0, -4.0})};
  const auto s = alignment_scores(img, txt, 10.0);
  EXPECT_NEAR(s[0], 6.0, 1e-12);
  EXPECT_NEAR(s[1], 8.0, 1e-12);
  EXPECT_NEAR(s[2], -10.0, 1e-12);
  try {
    alignment_scores(img, txt, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::contract);
  }
}

TEST(Alignment, ArgmaxInvariantToPositiveScale) {
  auto rng = make_rng(21);
  for (int trial = 0; trial < 100; ++trial) {
    Vector iv(8);
    for (auto& x : iv) x = standard_normal(rng);
    std::vector<Embedding> txt;
    for (int j = 0; j < 12; ++j) {
      Vector v(8);
      for (auto& x : v) x = standard_normal(rng);
      txt.push_back(emb(v));
    }
    const auto img = emb(iv);
    const auto ref = argmax_first(alignment_scores(img, txt, 1.0));
    for (double scale : {0.01, 1.0 / 0.07, 100.0}) EXPECT_EQ(argmax_first(alignment_scores(img, txt, scale)), ref);
  }
}

TEST(Alignment, TiesResolveToFirst) {
  EXPECT_EQ(argmax_first(std::vector<double>{1.0, 3.0, 3.0, 2.0}), 1u);
  EXPECT_THROW(argmax_first(std::vector<double>{}), Error);
}

TEST(ZeroShot, MatchesDirectComputation) {
  TableEncoder enc("table", 3);
  const Vector img_raw = {1.0, 2.0, 2.0};
  const std::vector<Vector> raw = {{1.0, 0.0, 0.0}, {0.0, 1.0, 1.0}, {2.0, 2.0, 1.0}};
  enc.set_image("img", img_raw);
  const std::vector<std::string> answers = {"red", "blue", "green"};
  for (std::size_t i = 0; i < raw.size(); ++i) enc.set_text("It is " + answers[i] + ".", raw[i]);
  const auto ps = prompts_of({{"red", "It is red."}, {"blue", "It is blue."}, {"green", "It is green."}});
  const auto pred = predict_zero_shot(enc, "img", ps);
  // independent reference: cosine * scale on raw vectors
  const double scale = 1.0 / 0.07;
  std::size_t best = 0;
  double best_score = -1e300;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    double d = 0, ni = 0, nt = 0;
    for (std::size_t k = 0; k < 3; ++k) {
      d += img_raw[k] * raw[i][k];
      ni += img_raw[k] * img_raw[k];
      nt += raw[i][k] * raw[i][k];
    }
    const double s = scale * d / std::sqrt(ni * nt);
    EXPECT_NEAR(pred.table[i].second, s, 1e-9);
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  EXPECT_EQ(pred.index, best);
  EXPECT_EQ(pred.answer, answers[best]);
}

TEST(LogitScale, InitialValueAndClamp) {
  MlpDualEncoder enc;
  EXPECT_NEAR(enc.logit_scale(), 1.0 / 0.07, 1e-12);
  enc.set_logit_scale(250.0);
  EXPECT_EQ(enc.logit_scale(), 100.0);
  EXPECT_THROW(enc.set_logit_scale(-1.0), Error);
}

TEST(Tagging, ExamplesByName) {
  EXPECT_EQ(tag_by_name("visual.layer1.0.bn1.weight"), ParamKind::norm_gain);
  EXPECT_EQ(tag_by_name("visual.layer1.0.bn1.bias"), ParamKind::norm_shift);
  EXPECT_EQ(tag_by_name("transformer.resblocks.0.ln_1.weight"), ParamKind::norm_gain);
  EXPECT_EQ(tag_by_name("ln_final.bias"), ParamKind::norm_shift);
  EXPECT_EQ(tag_by_name("transformer.resblocks.0.attn.in_proj_bias"), ParamKind::bias);
  EXPECT_EQ(tag_by_name("transformer.resblocks.0.mlp.c_fc.weight"), ParamKind::weight);
  EXPECT_EQ(tag_by_name("visual.layer2.0.downsample.1.weight"), ParamKind::weight);
  EXPECT_EQ(tag_by_name("visual.layer2.0.downsample.1.bias"), ParamKind::bias);
  EXPECT_EQ(tag_by_name("visual.proj"), ParamKind::weight);
  EXPECT_EQ(tag_by_name("logit_scale"), ParamKind::untagged);
  EXPECT_EQ(tag_by_name("visual.layer1.0.bn1.running_mean"), ParamKind::untagged);
}

struct PublishedCounts {
  const char* name;
  std::size_t bias;
  std::size_t norm;  // 0 when the published value is not used
  std::size_t binor;
};

TEST(Layouts, PublishedSelectionCounts) {
  for (const auto& c : {PublishedCounts{"RN101", 127488, 123392, 189184}, PublishedCounts{"RN50x16", 209088, 0, 319488},
                        PublishedCounts{"ViT-B/16", 171008, 65536, 203776}}) {
    const auto params = clip_layout(c.name);
    for (const auto& p : params) EXPECT_NE(p.kind, ParamKind::untagged) << p.name;
    const auto counts = count_parameters(params, TuneMode::binor);
    EXPECT_EQ(counts.bias, c.bias) << c.name;
    if (c.norm) EXPECT_EQ(counts.norm, c.norm) << c.name;
    EXPECT_EQ(counts.binor(), c.binor) << c.name;
    EXPECT_EQ(counts.selected, c.binor) << c.name;
    EXPECT_EQ(count_parameters(params, TuneMode::bitfit).selected, c.bias) << c.name;
    EXPECT_LT(double(counts.selected) / double(counts.total), 0.003) << c.name;
  }
}

TEST(Layouts, VitTotalMatchesReleasedModel) {
  // released ViT-B/16 state dict holds 149,620,737 scalars including logit_scale
  EXPECT_EQ(count_parameters(clip_layout("ViT-B/16"), TuneMode::full).total, 149620736u);
}

TEST(Layouts, ListingFileRoundTrip) {
  const auto file = fs::temp_directory_path() / "vlshot_listing.txt";
  std::ofstream(file) << "# toy\nblock.ln_1.weight 4\nblock.ln_1.bias 4\nblock.fc.weight 4,3\nblock.fc.bias 4\n"
                         "visual.class_embedding 4\nlogit_scale -\n";
  const auto params = read_param_listing(file);
  ASSERT_EQ(params.size(), 6u);
  EXPECT_EQ(params[2].size(), 12u);
  EXPECT_EQ(params[5].size(), 1u);
  EXPECT_EQ(params[5].kind, ParamKind::untagged);
  const auto counts = count_parameters(params, TuneMode::binor);
  EXPECT_EQ(counts.selected, 12u);
  fs::remove(file);
}

TEST(Layouts, UnknownLayoutIsConfigurationError) {
  try {
    clip_layout("RN9000");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::configuration);
  }
}

TEST(Layouts, LayoutBundleCannotEncode) {
  auto b = LayoutBundle::named("RN101");
  const std::vector<std::string> texts = {"a"};
  EXPECT_THROW(encode_text(b, texts), Error);
}
