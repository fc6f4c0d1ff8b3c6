#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "vlshot/app/config.hpp"
#include "vlshot/app/lexicon_lm.hpp"
#include "vlshot/app/runner.hpp"
#include "vlshot/app/synthetic.hpp"
#include "vlshot/app/tapc.hpp"
#include "vlshot/binor/checkpoint.hpp"

using namespace vlshot;
using namespace vlshot::app;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("vlshot_app_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<json> jsonl(const fs::path& p) {
  std::vector<json> out;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

struct CliResult {
  int code = -1;
  std::string out, err;
};

CliResult cli(const std::string& args, const fs::path& cwd) {
  const auto out = cwd / "cli.out", err = cwd / "cli.err";
  const auto cmd = "cd '" + cwd.string() + "' && '" + std::string(VLSHOT_CLI) + "' " + args + " > '" + out.string() +
                   "' 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::invalid_input;
}

/// Synthetic corpus with small splits, written once per test.
struct Corpus {
  fs::path dir;
  explicit Corpus(const std::string& name, std::size_t val_images = 4) : dir(scratch(name)) {
    SyntheticOptions o;
    o.train_images = 30;
    o.val_images = val_images;
    write_synthetic(dir, o);
  }
  RunConfig config(const std::string& preset) const {
    auto c = config_from_json(read_config_document(dir / preset), dir);
    c.output.dir = dir / "out";
    return c;
  }
};

json minimal(const std::string& command = "zero-shot-vqa") {
  return {{"command", command},
          {"data", {{"questions", "q.json"}, {"annotations", "a.json"}, {"vocab", "v.txt"}, {"parses", "p.conllu"}}}};
}

}  // namespace

TEST(RunConfigParse, RejectsUnknownKeysWithPath) {
  auto top = minimal();
  top["colour"] = 1;
  try {
    config_from_json(top);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::configuration);
    EXPECT_NE(std::string(e.what()).find("/colour"), std::string::npos);
  }
  auto nested = minimal();
  nested["tapc"] = {{"kk", 3}};
  try {
    config_from_json(nested);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/tapc/kk"), std::string::npos);
  }
}

TEST(RunConfigParse, WrongTypeIsConfigurationError) {
  auto j = minimal();
  j["tapc"] = {{"k", "many"}};
  EXPECT_EQ(code_of([&] { config_from_json(j); }), ErrorCode::configuration);
}

TEST(RunConfigParse, RelativePathsResolveAgainstBase) {
  const auto c = config_from_json(minimal(), "/data/run");
  EXPECT_EQ(c.data.questions, fs::path("/data/run/q.json"));
}

TEST(RunConfigParse, RoundTripIsStable) {
  auto j = minimal("few-shot-vqa");
  j["few_shot"] = {{"shots", 4}, {"mode", json::array({"binor", "full"})}};
  j["entailment"] = {{"grid", json::array({{{"learning_rate", 0.01}, {"batch_size", 4}, {"dropout", 0.1}}})}};
  const auto c = config_from_json(j, "/base");
  const auto once = config_to_json(c);
  EXPECT_EQ(config_to_json(config_from_json(once)), once);
  EXPECT_EQ(c.few_shot.modes, (std::vector<TuneMode>{TuneMode::binor, TuneMode::full}));
  EXPECT_EQ(c.entailment.grid.size(), 1u);
}

TEST(RunConfigParse, DefaultGridHas27Points) {
  auto j = minimal("entailment");
  j["entailment"] = {{"grid", "default"}};
  EXPECT_EQ(config_from_json(j).entailment.grid.size(), 27u);
}

TEST(RunConfigValidate, RejectsUndefinedAblationCombinations) {
  const std::vector<std::vector<std::string>> bad = {{"qip_baseline", "no_parsing_template"},
                                                     {"qip_baseline", "no_demo_template"},
                                                     {"no_demo_template", "no_parsing_template"},
                                                     {"qip_baseline", "demo_filter"},
                                                     {"no_answer_filter", "demo_filter"}};
  for (const auto& flags : bad) {
    auto j = minimal();
    for (const auto& f : flags) j["tapc"][f] = true;
    const auto c = config_from_json(j);
    EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::configuration) << flags[0] << "+" << flags[1];
  }
  for (const char* ok : {"qip_baseline", "no_answer_filter", "no_demo_template", "no_parsing_template"}) {
    auto j = minimal();
    j["tapc"][ok] = true;
    EXPECT_NO_THROW(validate(config_from_json(j))) << ok;
  }
}

TEST(RunConfigValidate, CommandSpecificRequirements) {
  EXPECT_EQ(code_of([] { validate(config_from_json(minimal("few-shot-vqa"))); }), ErrorCode::configuration);
  auto j = minimal("few-shot-vqa");
  j["data"]["train_questions"] = "tq.json";
  j["data"]["train_annotations"] = "ta.json";
  EXPECT_NO_THROW(validate(config_from_json(j)));
  j["backend"] = {{"encoder", "table"}, {"encoder_table", "t.json"}};
  EXPECT_EQ(code_of([&] { validate(config_from_json(j)); }), ErrorCode::configuration);
  EXPECT_EQ(code_of([] { validate(config_from_json(json{{"command", "entailment"}})); }), ErrorCode::configuration);
}

TEST(RunConfigOverride, DottedKeysParseJsonValues) {
  auto j = minimal();
  apply_override(j, "tapc.k", "50");
  apply_override(j, "tapc.no_answer_filter", "true");
  apply_override(j, "entailment.direction", "image->text");
  const auto c = config_from_json(j);
  EXPECT_EQ(c.tapc.k, 50u);
  EXPECT_TRUE(c.tapc.no_answer_filter);
  EXPECT_EQ(c.entailment.direction, Direction::image_to_text);
}

TEST(RunConfigOverride, EnvironmentSuppliesCacheAndCheckpointRoots) {
  ::setenv("VLSHOT_CACHE_ROOT", "/tmp/cache-root", 1);
  ::setenv("VLSHOT_CHECKPOINT_ROOT", "/tmp/ckpt-root", 1);
  auto c = config_from_json(minimal());
  resolve_locations(c);
  EXPECT_EQ(c.output.cache_dir, fs::path("/tmp/cache-root"));
  EXPECT_EQ(c.output.checkpoint_dir, fs::path("/tmp/ckpt-root"));
  ::unsetenv("VLSHOT_CACHE_ROOT");
  ::unsetenv("VLSHOT_CHECKPOINT_ROOT");
  auto d = config_from_json(minimal());
  resolve_locations(d);
  EXPECT_TRUE(d.output.cache_dir.empty());
  EXPECT_EQ(d.output.checkpoint_dir, d.output.dir / "checkpoints");
}

TEST(TapcRouting, YesNoDetection) {
  EXPECT_TRUE(is_yesno_question("Is the man wearing a hat?"));
  EXPECT_TRUE(is_yesno_question("Does this look fun?"));
  EXPECT_FALSE(is_yesno_question("Is this a cat or a dog?"));
  EXPECT_FALSE(is_yesno_question("What color is the bus?"));
}

TEST(LexiconMock, CueWordsAndDemonstrationsRaiseScores) {
  LexiconLm lm({"yes", "no", "red", "2", "table"});
  const auto ctx = std::string("The color of the bus is <extra_id_0>.");
  EXPECT_GT(lm.score(ctx, "red"), lm.score(ctx, "yes"));
  EXPECT_GT(lm.score("There are <extra_id_0> cars.", "2"), lm.score("There are <extra_id_0> cars.", "yes"));
  const auto demo = std::string("The table is big. The color of the bus is <extra_id_0>.");
  EXPECT_DOUBLE_EQ(lm.score(demo, "table") - lm.score(ctx, "table"), 1.0);
  EXPECT_EQ(lm.score(ctx, "red"), lm.score(ctx, "red"));
}

class TapcFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    corpus = std::make_unique<Corpus>("tapc");
    cfg = corpus->config("zero_shot.json");
    in = std::make_unique<VqaInputs>(VqaInputs::load(cfg));
    lm = std::make_unique<LexiconLm>(in->vocab.answers(), in->parses.get());
  }
  TapcResources res() { return TapcResources{in->vocab, in->bank, in->parses.get(), *lm, nullptr}; }
  const VqaExample& first(AnswerType t) {
    for (const auto& ex : in->eval)
      if (ex.answer_type == t) return ex;
    throw std::runtime_error("no example");
  }

  std::unique_ptr<Corpus> corpus;
  RunConfig cfg;
  std::unique_ptr<VqaInputs> in;
  std::unique_ptr<LexiconLm> lm;
};

TEST_F(TapcFixture, NoAnswerFilterKeepsWholeVocabulary) {
  auto r = res();
  auto t = cfg.tapc;
  t.no_answer_filter = true;
  const auto b = build_prompts(first(AnswerType::other), t, r);
  EXPECT_EQ(b.set.size(), in->vocab.size());
  EXPECT_EQ(b.provenance.filter_mode, "none");
}

TEST_F(TapcFixture, FilterKeepsK) {
  auto r = res();
  const auto b = build_prompts(first(AnswerType::other), cfg.tapc, r);
  EXPECT_EQ(b.set.size(), 5u);
  EXPECT_EQ(b.provenance.route, "masked");
  for (const auto& e : b.set.entries) EXPECT_NE(e.prompt.find(e.answer), std::string::npos);
}

TEST_F(TapcFixture, QipBaselineUsesQuestionIrrelevantPrompts) {
  auto r = res();
  auto t = cfg.tapc;
  t.qip_baseline = true;
  const auto& ex = first(AnswerType::other);
  const auto b = build_prompts(ex, t, r);
  const auto expected = build_qip_prompts(ex.question, in->vocab.answers());
  ASSERT_EQ(b.set.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(b.set.entries[i].prompt, expected.entries[i].prompt);
  EXPECT_EQ(b.provenance.route, "qip");
}

TEST_F(TapcFixture, YesNoQuestionsGetTwoPrompts) {
  auto r = res();
  const auto b = build_prompts(first(AnswerType::yes_no), cfg.tapc, r);
  ASSERT_EQ(b.set.size(), 2u);
  EXPECT_EQ(b.set.entries[0].answer, "yes");
  EXPECT_EQ(b.set.entries[1].answer, "no");
  EXPECT_NE(b.set.entries[1].prompt.find("not"), std::string::npos);
}

TEST_F(TapcFixture, TemplateAblationsSelectTheSource) {
  auto r = res();
  auto t = cfg.tapc;
  t.no_demo_template = true;
  EXPECT_EQ(build_prompts(first(AnswerType::other), t, r).provenance.template_source, "parsing");
  t.no_demo_template = false;
  t.no_parsing_template = true;
  EXPECT_EQ(build_prompts(first(AnswerType::other), t, r).provenance.template_source, "demo");
  t.no_parsing_template = false;
  t.ensemble_threshold = 1.0;  // no generated template is that confident
  EXPECT_EQ(build_prompts(first(AnswerType::other), t, r).provenance.template_source, "parsing");
  t.ensemble_threshold = -10.0;
  EXPECT_EQ(build_prompts(first(AnswerType::other), t, r).provenance.template_source, "demo");
}

TEST_F(TapcFixture, DemonstratedFilteringUsesFilledStatements) {
  auto r = res();
  auto t = cfg.tapc;
  t.k = 9;  // eight cued colors plus one more
  const auto has_wood = [](const BuiltPrompts& b) {
    bool wood = false;
    for (const auto& e : b.set.entries) wood |= e.answer == "wood";
    return wood;
  };
  EXPECT_FALSE(has_wood(build_prompts(first(AnswerType::other), t, r)));
  t.demo_filter = true;
  const std::vector<std::string> demos = {"The color of the thing is wood."};
  const auto b = build_prompts(first(AnswerType::other), t, r, &demos);
  EXPECT_EQ(b.provenance.filter_mode, "demonstrated");
  EXPECT_TRUE(has_wood(b));
}

TEST(ZeroShotRun, TenQuestionFixtureGivesTenRecordsAndBreakdown) {
  Corpus c("zs10");
  auto cfg = c.config("zero_shot.json");
  cfg.limit = 10;
  const auto r = run_zero_shot_vqa(cfg);
  const auto recs = jsonl(cfg.output.dir / "results.jsonl");
  ASSERT_EQ(recs.size(), 10u);
  for (const auto& rec : recs) {
    for (const char* k : {"question_id", "prediction", "score", "answer_type", "provenance"}) EXPECT_TRUE(rec.contains(k)) << k;
    const double s = rec["score"].get<double>();
    EXPECT_TRUE(s == 0.0 || s == 1.0 / 3.0 || s == 2.0 / 3.0 || s == 1.0);
  }
  const auto& b = r.metrics.at("breakdown");
  for (const char* k : {"yes_no", "number", "other", "all"}) EXPECT_TRUE(b.contains(k));
  const auto table = slurp(cfg.output.dir / "results.txt");
  EXPECT_NE(table.find("Y/N"), std::string::npos);
  EXPECT_NE(table.find("Other"), std::string::npos);
}

TEST(ZeroShotRun, AllEqualsMeanOfRecordScores) {
  Corpus c("zsmean", 8);
  const auto cfg = c.config("zero_shot.json");
  const auto r = run_zero_shot_vqa(cfg);
  double sum = 0.0;
  const auto recs = jsonl(cfg.output.dir / "results.jsonl");
  for (const auto& rec : recs) sum += rec["score"].get<double>();
  EXPECT_NEAR(r.metrics["breakdown"]["all"].get<double>(), std::round(10000.0 * sum / double(recs.size())) / 100.0, 1e-9);
}

TEST(ZeroShotRun, NoAnswerFilterPromptsCoverVocabulary) {
  Corpus c("zsnaf");
  auto cfg = c.config("zero_shot.json");
  cfg.tapc.no_answer_filter = true;
  run_zero_shot_vqa(cfg);
  const auto vocab = AnswerVocabulary::load(cfg.data.vocab);
  for (const auto& rec : jsonl(cfg.output.dir / "results.jsonl")) {
    if (rec["answer_type"] == "yes/no") continue;
    EXPECT_EQ(rec["provenance"]["prompts"].get<std::size_t>(), vocab.size());
  }
}

TEST(ZeroShotRun, PerQuestionErrorsDegradeToZero) {
  Corpus c("zserr");
  auto cfg = c.config("zero_shot.json");
  // drop the parse of the first validation question
  const auto first_q = VqaInputs::load(cfg).eval.front().question;
  std::ifstream in(cfg.data.parses);
  std::string kept, block;
  for (std::string line; std::getline(in, line);) {
    block += line + '\n';
    if (line.empty()) {
      if (block.find("# text = " + first_q + "\n") == std::string::npos) kept += block;
      block.clear();
    }
  }
  in.close();
  std::ofstream(cfg.data.parses) << kept;
  cfg.tapc.no_demo_template = true;
  const auto r = run_zero_shot_vqa(cfg);
  EXPECT_GE(r.errors, 1u);
  const auto recs = jsonl(cfg.output.dir / "results.jsonl");
  bool seen = false;
  for (const auto& rec : recs)
    if (rec["question"] == first_q) {
      seen = true;
      EXPECT_EQ(rec["score"].get<double>(), 0.0);
      EXPECT_EQ(rec["error"]["code"], "adapter");
    }
  EXPECT_TRUE(seen);
}

TEST(ZeroShotRun, WorkerCountDoesNotChangeResults) {
  Corpus c("zsworkers", 8);
  auto one = c.config("zero_shot.json");
  auto four = one;
  four.workers = 4;
  four.output.dir = c.dir / "out4";
  run_zero_shot_vqa(one);
  run_zero_shot_vqa(four);
  EXPECT_EQ(slurp(one.output.dir / "results.jsonl"), slurp(four.output.dir / "results.jsonl"));
}

TEST(ZeroShotRun, CacheDirectoryIsReusedWithoutChangingResults) {
  Corpus c("zscache");
  auto cfg = c.config("zero_shot.json");
  cfg.output.cache_dir = c.dir / "cache";
  run_zero_shot_vqa(cfg);
  ASSERT_TRUE(fs::exists(cfg.output.cache_dir / "filtered_sets.json"));
  ASSERT_TRUE(fs::exists(cfg.output.cache_dir / "embeddings.bin"));
  const auto before = slurp(cfg.output.dir / "results.jsonl");
  cfg.output.dir = c.dir / "again";
  run_zero_shot_vqa(cfg);
  EXPECT_EQ(before, slurp(cfg.output.dir / "results.jsonl"));
}

TEST(Manifest, ListsEveryArtifactAndDatasetHash) {
  Corpus c("manifest");
  const auto r = run_zero_shot_vqa(c.config("zero_shot.json"));
  const auto m = json::parse(slurp(r.manifest));
  for (const char* k : {"config", "code_fingerprint", "datasets", "wall_clock_seconds", "artifacts", "metric_definition"})
    EXPECT_TRUE(m.contains(k)) << k;
  ASSERT_EQ(m["artifacts"].size(), r.artifacts.size());
  for (const auto& a : m["artifacts"]) EXPECT_TRUE(fs::exists(a["path"].get<std::string>()));
  for (const char* d : {"questions", "annotations", "vocab", "parses"}) EXPECT_TRUE(m["datasets"].contains(d)) << d;
}

TEST(Manifest, ReplayReproducesMetricFilesBitwise) {
  Corpus c("replay");
  const auto r = run_zero_shot_vqa(c.config("zero_shot.json"));
  const auto rep = replay_manifest(r.manifest, c.dir / "replayed");
  ASSERT_FALSE(rep.checks.empty());
  EXPECT_TRUE(rep.identical());
  EXPECT_EQ(slurp(c.dir / "out" / "breakdown.json"), slurp(c.dir / "replayed" / "breakdown.json"));
}

TEST(Manifest, ReplayRefusesChangedDatasets) {
  Corpus c("replaychanged");
  const auto r = run_zero_shot_vqa(c.config("zero_shot.json"));
  std::ofstream(c.dir / "vocab.txt", std::ios::app) << "zebra\n";
  EXPECT_EQ(code_of([&] { replay_manifest(r.manifest, c.dir / "replayed"); }), ErrorCode::configuration);
}

TEST(FewShotRun, SingleShotGivesThirtyEpochTraceAndSelectedCheckpoint) {
  Corpus c("fs1");
  auto cfg = c.config("few_shot.json");
  cfg.few_shot.shots = 1;
  cfg.few_shot.modes = {TuneMode::binor};
  const auto r = run_few_shot(cfg);
  const auto trace = json::parse(slurp(cfg.output.dir / "trace_binor.json"));
  EXPECT_EQ(trace["epochs"].size(), 30u);
  auto bundle = make_mlp_encoder(cfg.backend);
  const auto ckpt = cfg.output.dir / "checkpoints" / ("binor-" + to_hex(config_fingerprint(cfg)) + ".ckpt");
  ASSERT_TRUE(fs::exists(ckpt));
  const auto info = load_checkpoint(ckpt, *bundle);
  const auto sel = select_trainable(*bundle, TuneMode::binor);
  EXPECT_EQ(info.names, sel.selected);
  EXPECT_EQ(info.scalars, sel.counts.selected);
  EXPECT_LT(info.scalars, sel.counts.total);
}

TEST(FewShotRun, ThreeModesGiveComparableRows) {
  Corpus c("fs3");
  const auto cfg = c.config("few_shot.json");
  const auto r = run_few_shot(cfg);
  const auto& modes = r.metrics.at("modes");
  for (const char* m : {"binor", "bitfit", "full"}) {
    ASSERT_TRUE(modes.contains(m)) << m;
    EXPECT_EQ(modes[m]["breakdown"]["total"], modes["binor"]["breakdown"]["total"]);
  }
  EXPECT_LT(modes["bitfit"]["selected_scalars"].get<std::size_t>(), modes["binor"]["selected_scalars"].get<std::size_t>());
  EXPECT_LT(modes["binor"]["selected_scalars"].get<std::size_t>(), modes["full"]["selected_scalars"].get<std::size_t>());
  const auto table = slurp(cfg.output.dir / "results.txt");
  for (const char* m : {"binor", "bitfit", "full"}) EXPECT_NE(table.find(m), std::string::npos);
}

TEST(FewShotRun, ReplayIsIdentical) {
  Corpus c("fsreplay");
  auto cfg = c.config("few_shot.json");
  cfg.few_shot.modes = {TuneMode::binor};
  cfg.few_shot.epochs = 5;
  const auto r = run_few_shot(cfg);
  const auto rep = replay_manifest(r.manifest, c.dir / "replayed");
  EXPECT_TRUE(rep.identical());
}

TEST(FewShotRun, DemonstratedFilteringRuns) {
  Corpus c("fsdemo");
  auto cfg = c.config("few_shot.json");
  cfg.few_shot.modes = {TuneMode::binor};
  cfg.few_shot.epochs = 3;
  cfg.few_shot.shots = 4;
  cfg.tapc.demo_filter = true;
  run_few_shot(cfg);
  std::size_t demonstrated = 0;
  for (const auto& rec : jsonl(cfg.output.dir / "results_binor.jsonl"))
    demonstrated += rec["provenance"]["filter"] == "demonstrated";
  EXPECT_GT(demonstrated, 0u);
}

TEST(EntailmentRun, TextToImageTransferWithControl) {
  Corpus c("ent");
  const auto cfg = c.config("entailment.json");
  const auto r = run_entailment(cfg);
  EXPECT_GE(r.metrics["test_accuracy"].get<double>(), 0.95);
  EXPECT_NEAR(r.metrics["control_accuracy"].get<double>(), r.metrics["majority"].get<double>(), 0.02);
  EXPECT_FALSE(r.metrics["swapped_routing"].get<bool>());
  EXPECT_EQ(r.metrics["train_premise"], "text");
  EXPECT_EQ(r.metrics["eval_premise"], "image");
  for (const char* k : {"valid_accuracy", "test_accuracy", "control_accuracy"}) EXPECT_TRUE(r.metrics.contains(k));
}

TEST(EntailmentRun, ImageToTextFlagsSwappedRouting) {
  Corpus c("ent2");
  auto cfg = c.config("entailment.json");
  cfg.entailment.direction = Direction::image_to_text;
  cfg.entailment.control = ControlMode::none;
  const auto r = run_entailment(cfg);
  EXPECT_TRUE(r.metrics["swapped_routing"].get<bool>());
  EXPECT_EQ(r.metrics["train_premise"], "image");
  EXPECT_TRUE(r.metrics["control_accuracy"].is_null());
}

TEST(Cli, ZeroShotReportAndReplay) {
  Corpus c("cli");
  auto run = cli("zero-shot-vqa -c zero_shot.json --limit 6 -o out", c.dir);
  ASSERT_EQ(run.code, 0) << run.err;
  EXPECT_NE(run.out.find("manifest:"), std::string::npos);
  auto rep = cli("replay out/manifest.json -o replayed", c.dir);
  EXPECT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("identical"), std::string::npos);
  auto table = cli("report out", c.dir);
  EXPECT_EQ(table.code, 0);
  EXPECT_NE(table.out.find("Y/N"), std::string::npos);
}

TEST(Cli, OverridesReachTheConfig) {
  Corpus c("cliset");
  auto run = cli("zero-shot-vqa -c zero_shot.json --limit 3 --set tapc.k=2 -o out", c.dir);
  ASSERT_EQ(run.code, 0) << run.err;
  const auto m = json::parse(slurp(c.dir / "out" / "manifest.json"));
  EXPECT_EQ(m["config"]["tapc"]["k"], 2);
  EXPECT_EQ(m["config"]["limit"], 3);
}

TEST(Cli, ConfigurationErrorsExitNonzeroWithStructuredSummary) {
  Corpus c("clierr");
  auto bad = cli("zero-shot-vqa -c zero_shot.json --set tapc.bogus=1", c.dir);
  EXPECT_EQ(bad.code, 2);
  const auto err = json::parse(bad.err);
  EXPECT_EQ(err["status"], "error");
  EXPECT_EQ(err["code"], "configuration");
  auto combo = cli("zero-shot-vqa -c zero_shot.json --qip-baseline --no-parsing-template", c.dir);
  EXPECT_EQ(combo.code, 2);
  auto missing = cli("zero-shot-vqa --set data.questions=nowhere.json --set data.annotations=x.json "
                     "--set data.vocab=vocab.txt --set data.parses=parses.conllu",
                     c.dir);
  EXPECT_EQ(missing.code, 1);
  EXPECT_EQ(json::parse(missing.err)["code"], "io");
}

TEST(Cli, ParameterReportMatchesPublishedCounts) {
  const auto dir = scratch("cliparams");
  auto r = cli("report --params RN101", dir);
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* n : {"127488", "123392", "189184"}) EXPECT_NE(r.out.find(n), std::string::npos) << n;
}
