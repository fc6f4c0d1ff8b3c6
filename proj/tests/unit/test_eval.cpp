#include <gtest/gtest.h>

#include "vlshot/core/random.hpp"
#include "vlshot/eval/metrics.hpp"

using namespace vlshot;

namespace {

std::vector<std::string> answers_with(std::size_t n, const std::string& hit, const std::string& miss = "other") {
  std::vector<std::string> a(10, miss);
  for (std::size_t i = 0; i < n; ++i) a[i] = hit;
  return a;
}

}  // namespace

TEST(VqaScore, MatchCountTable) {
  const double expected[11] = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1, 1, 1, 1, 1, 1, 1, 1};
  for (std::size_t n = 0; n <= 10; ++n) EXPECT_DOUBLE_EQ(vqa_score("blue", answers_with(n, "blue")), expected[n]) << n;
}

TEST(VqaScore, ComparesNormalizedStrings) {
  EXPECT_DOUBLE_EQ(vqa_score("Two", answers_with(3, "2")), 1.0);
  EXPECT_DOUBLE_EQ(vqa_score("the dog.", answers_with(1, "dog")), 1.0 / 3.0);
}

TEST(VqaScore, RequiresTenAnswers) {
  try {
    vqa_score("x", std::vector<std::string>(9, "x"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::contract);
  }
}

TEST(Aggregate, WorkedExample) {
  const std::vector<VqaResult> rs = {{"1", "yes", 1.0, AnswerType::yes_no},
                                     {"2", "no", 0.0, AnswerType::yes_no},
                                     {"3", "2", 2.0 / 3.0, AnswerType::number},
                                     {"4", "red", 1.0 / 3.0, AnswerType::other}};
  const auto b = aggregate(rs);
  EXPECT_EQ(b.yes_no, 50.0);
  EXPECT_EQ(b.number, 66.67);
  EXPECT_EQ(b.other, 33.33);
  EXPECT_EQ(b.all, 50.0);
  EXPECT_EQ(b.counts, (std::array<std::size_t, 3>{2, 1, 1}));
}

TEST(Aggregate, AllIsMeanOverQuestionsNotCategories) {
  auto rng = make_rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<VqaResult> rs;
    const auto n = 1 + uniform_below(rng, 300);
    for (std::size_t i = 0; i < n; ++i)
      rs.push_back({std::to_string(i), "", double(uniform_below(rng, 4)) / 3.0, kAnswerTypes[uniform_below(rng, 3)]});
    // independent recomputation
    long double sum = 0;
    for (const auto& r : rs) sum += r.score;
    const double expected = double(100.0L * sum / (long double)n);
    EXPECT_NEAR(aggregate(rs, false).all, expected, 1e-12);
  }
}

TEST(Aggregate, EmptyCategoryReportsZero) {
  const std::vector<VqaResult> rs = {{"1", "yes", 1.0, AnswerType::yes_no}};
  const auto b = aggregate(rs);
  EXPECT_EQ(b.number, 0.0);
  EXPECT_EQ(b.other, 0.0);
  EXPECT_EQ(b.all, 100.0);
}

TEST(Entailment, Accuracy) {
  using L = EntailmentLabel;
  const std::vector<L> gold = {L::entailment, L::neutral, L::contradiction, L::neutral};
  const std::vector<L> pred = {L::entailment, L::contradiction, L::contradiction, L::neutral};
  EXPECT_DOUBLE_EQ(entailment_accuracy(pred, gold), 0.75);
  EXPECT_EQ(entailment_accuracy(std::vector<L>{}, std::vector<L>{}), 0.0);
  EXPECT_THROW(entailment_accuracy(pred, std::vector<L>{L::neutral}), Error);
}

TEST(Qip, PromptFormat) {
  const std::vector<std::string> answers = {"red", "blue"};
  const auto ps = build_qip_prompts("What color is the bus?", answers);
  ASSERT_EQ(ps.size(), 2u);
  EXPECT_EQ(ps.entries[0].prompt, "question: What color is the bus? answer: red");
  EXPECT_EQ(ps.entries[1].answer, "blue");
}
