#pragma once

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/app/backends.hpp"
#include "vlshot/app/config.hpp"
#include "vlshot/app/lexicon_lm.hpp"
#include "vlshot/app/tapc.hpp"
#include "vlshot/binor/checkpoint.hpp"
#include "vlshot/binor/training.hpp"
#include "vlshot/clip/embedding.hpp"
#include "vlshot/clip/scoring.hpp"
#include "vlshot/dataset/loaders.hpp"
#include "vlshot/dataset/sampling.hpp"
#include "vlshot/dataset/taxonomy.hpp"
#include "vlshot/entailment/transfer.hpp"
#include "vlshot/eval/metrics.hpp"

namespace vlshot::app {

inline constexpr std::string_view kVersion = "0.3.0";

inline constexpr std::string_view kMetricDefinition =
    "vqa accuracy: min(#matching human answers / 3, 1) after official answer normalization";

inline std::string code_fingerprint() {
  Fnv1a h;
  h.str(kVersion).str(__VERSION__).u64(__cplusplus);
  return to_hex(h.value());
}

inline std::string file_digest(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot read " + file.string());
  Fnv1a h;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    h.bytes(buf, static_cast<std::size_t>(in.gcount()));
  }
  return to_hex(h.value());
}

struct Artifact {
  std::string name;
  fs::path path;
  bool metric = true;  // compared bitwise on replay
};

struct RunOutcome {
  nlohmann::json metrics;
  std::vector<Artifact> artifacts;
  fs::path manifest;
  std::size_t errors = 0;
  std::size_t warnings = 0;
};

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// is rethrown after all threads finish.
inline void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& fn) {
  workers = std::max<std::size_t>(1, std::min(workers, n));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex m;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(m);
          if (!first) first = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

/// Everything a VQA run reads, loaded once.
struct VqaInputs {
  AnswerVocabulary vocab;
  QuestionTaxonomy taxonomy;
  DemonstrationBank bank;
  std::unique_ptr<ConlluParseProvider> parses;
  std::vector<VqaExample> eval;
  std::vector<VqaExample> train;

  static VqaInputs load(const RunConfig& cfg) {
    VqaInputs in;
    in.vocab = AnswerVocabulary::load(cfg.data.vocab);
    in.taxonomy = QuestionTaxonomy::load(cfg.data.taxonomy);
    in.bank = DemonstrationBank::load(cfg.data.demonstrations);
    in.bank.check_against(in.taxonomy);
    if (!cfg.data.parses.empty())
      in.parses = std::make_unique<ConlluParseProvider>(ConlluParseProvider::load(cfg.data.parses));
    in.eval = load_vqa_split(cfg.data.questions, cfg.data.annotations, in.vocab, in.taxonomy).examples;
    if (cfg.limit && in.eval.size() > cfg.limit) in.eval.resize(cfg.limit);
    if (cfg.command == Command::few_shot_vqa)
      in.train = load_vqa_split(cfg.data.train_questions, cfg.data.train_annotations, in.vocab, in.taxonomy).examples;
    return in;
  }
};

struct ErrorRecord {
  ErrorCode code = ErrorCode::invalid_input;
  std::string message;
};

struct PromptOutcome {
  std::optional<BuiltPrompts> built;
  std::optional<ErrorRecord> error;
};

struct QuestionRecord {
  const VqaExample* example = nullptr;
  std::string prediction;
  double score = 0.0;
  std::optional<PromptProvenance> provenance;
  std::optional<ErrorRecord> error;
};

/// Builds prompts for every example. Per-question failures are recorded;
/// configuration errors abort.
inline std::vector<PromptOutcome> build_all_prompts(
    const std::vector<VqaExample>& examples, const TapcConfig& cfg, TapcResources& res, std::size_t workers,
    const std::function<const std::vector<std::string>*(const VqaExample&)>& demos_for = {}) {
  std::vector<PromptOutcome> out(examples.size());
  parallel_for(examples.size(), workers, [&](std::size_t i) {
    try {
      out[i].built = build_prompts(examples[i], cfg, res, demos_for ? demos_for(examples[i]) : nullptr);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::configuration) throw;
      out[i].error = ErrorRecord{e.code(), e.what()};
    }
  });
  return out;
}

inline std::vector<QuestionRecord> predict_all(const std::vector<VqaExample>& examples,
                                               const std::vector<PromptOutcome>& prompts, EncoderBundle& bundle,
                                               EmbeddingCache* cache, std::size_t workers) {
  std::vector<QuestionRecord> out(examples.size());
  parallel_for(examples.size(), workers, [&](std::size_t i) {
    auto& r = out[i];
    r.example = &examples[i];
    if (prompts[i].error) {
      r.error = prompts[i].error;
      return;
    }
    r.provenance = prompts[i].built->provenance;
    try {
      r.prediction = predict_zero_shot(bundle, examples[i].image_ref, prompts[i].built->set, cache).answer;
      r.score = vqa_score(r.prediction, examples[i].human_answers);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::configuration) throw;
      r.prediction.clear();
      r.score = 0.0;
      r.error = ErrorRecord{e.code(), e.what()};
    }
  });
  return out;
}

inline nlohmann::json breakdown_to_json(const Breakdown& b) {
  return {{"yes_no", b.yes_no},
          {"number", b.number},
          {"other", b.other},
          {"all", b.all},
          {"counts", {{"yes_no", b.counts[0]}, {"number", b.counts[1]}, {"other", b.counts[2]}}},
          {"total", b.total}};
}

inline Breakdown breakdown_of(const std::vector<QuestionRecord>& records) {
  std::vector<VqaResult> results;
  results.reserve(records.size());
  for (const auto& r : records)
    results.push_back({r.example->question_id, r.prediction, r.score, r.example->answer_type});
  return aggregate(results);
}

inline void write_results(const fs::path& file, const std::vector<QuestionRecord>& records) {
  std::ofstream out(file);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write " + file.string());
  for (const auto& r : records) {
    nlohmann::json j = {{"question_id", r.example->question_id},
                        {"question", r.example->question},
                        {"image", r.example->image_ref},
                        {"question_type", r.example->question_type},
                        {"answer_type", to_string(r.example->answer_type)},
                        {"prediction", r.prediction},
                        {"score", r.score}};
    j["provenance"] = r.provenance ? r.provenance->to_json() : nlohmann::json(nullptr);
    j["error"] = r.error ? nlohmann::json{{"code", to_string(r.error->code)}, {"message", r.error->message}}
                         : nlohmann::json(nullptr);
    out << j.dump() << '\n';
  }
}

inline void write_json(const fs::path& file, const nlohmann::json& j) {
  std::ofstream out(file);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write " + file.string());
  out << j.dump(2) << '\n';
}

inline void write_text(const fs::path& file, const std::string& s) {
  std::ofstream out(file);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write " + file.string());
  out << s;
}

struct TableRow {
  std::string name;
  Breakdown b;
  std::string extra;
};

/// Y/N, Num, Other, All columns, two decimals.
inline std::string format_vqa_table(const std::vector<TableRow>& rows, const std::string& extra_header = {}) {
  std::size_t w = 6;
  for (const auto& r : rows) w = std::max(w, r.name.size());
  char line[512];
  std::string out;
  std::snprintf(line, sizeof line, "%-*s %8s %8s %8s %8s %7s", int(w), "run", "Y/N", "Num", "Other", "All", "n");
  out += line;
  if (!extra_header.empty()) out += "  " + extra_header;
  out += '\n';
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-*s %8.2f %8.2f %8.2f %8.2f %7zu", int(w), r.name.c_str(), r.b.yes_no,
                  r.b.number, r.b.other, r.b.all, r.b.total);
    out += line;
    if (!r.extra.empty()) out += "  " + r.extra;
    out += '\n';
  }
  return out;
}

inline std::string format_entailment_table(const std::vector<std::pair<std::string, TransferReport>>& rows) {
  std::size_t w = 6;
  for (const auto& [n, _] : rows) w = std::max(w, n.size());
  char line[512];
  std::snprintf(line, sizeof line, "%-*s %-12s %8s %8s %8s %8s", int(w), "run", "direction", "valid", "test",
                "control", "majority");
  std::string out = std::string(line) + '\n';
  for (const auto& [name, r] : rows) {
    char ctl[32];
    if (r.control_accuracy)
      std::snprintf(ctl, sizeof ctl, "%8.2f", 100.0 * *r.control_accuracy);
    else
      std::snprintf(ctl, sizeof ctl, "%8s", "-");
    std::snprintf(line, sizeof line, "%-*s %-12s %8.2f %8.2f %s %8.2f", int(w), name.c_str(),
                  std::string(to_string(r.direction)).c_str(), 100.0 * r.valid_accuracy, 100.0 * r.test_accuracy, ctl,
                  100.0 * r.majority);
    out += std::string(line) + '\n';
  }
  return out;
}

inline std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::vector<std::pair<std::string, fs::path>> dataset_files(const RunConfig& c) {
  std::vector<std::pair<std::string, fs::path>> files;
  auto add = [&](const char* name, const fs::path& p) {
    if (!p.empty()) files.emplace_back(name, p);
  };
  if (c.command == Command::entailment) {
    add("snli_ve_train", c.data.snli_ve_train);
    add("snli_ve_valid", c.data.snli_ve_valid);
    add("snli_ve_test", c.data.snli_ve_test);
  } else {
    add("questions", c.data.questions);
    add("annotations", c.data.annotations);
    if (c.command == Command::few_shot_vqa) {
      add("train_questions", c.data.train_questions);
      add("train_annotations", c.data.train_annotations);
    }
    add("vocab", c.data.vocab);
    add("taxonomy", c.data.taxonomy);
    add("demonstrations", c.data.demonstrations);
    add("parses", c.data.parses);
  }
  if (c.backend.encoder == "table") add("encoder_table", c.backend.encoder_table);
  return files;
}

class ManifestWriter {
 public:
  explicit ManifestWriter(const RunConfig& cfg) : cfg_(cfg), started_(utc_now()), t0_(std::chrono::steady_clock::now()) {}

  RunOutcome finish(RunOutcome outcome) const {
    nlohmann::json datasets = nlohmann::json::object();
    for (const auto& [name, p] : dataset_files(cfg_))
      datasets[name] = {{"path", p.string()}, {"fnv1a64", file_digest(p)}, {"bytes", fs::file_size(p)}};
    nlohmann::json artifacts = nlohmann::json::array();
    for (const auto& a : outcome.artifacts)
      artifacts.push_back({{"name", a.name}, {"path", a.path.string()}, {"fnv1a64", file_digest(a.path)}, {"metric", a.metric}});
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
    const nlohmann::json m = {{"tool", "vlshot"},
                              {"version", kVersion},
                              {"code_fingerprint", code_fingerprint()},
                              {"command", to_string(cfg_.command)},
                              {"config", config_to_json(cfg_)},
                              {"config_fingerprint", to_hex(config_fingerprint(cfg_))},
                              {"datasets", datasets},
                              {"started_at", started_},
                              {"wall_clock_seconds", secs},
                              {"artifacts", artifacts},
                              {"metrics", outcome.metrics},
                              {"metric_definition", kMetricDefinition},
                              {"errors", outcome.errors},
                              {"warnings", outcome.warnings}};
    outcome.manifest = cfg_.output.dir / "manifest.json";
    write_json(outcome.manifest, m);
    return outcome;
  }

 private:
  const RunConfig& cfg_;
  std::string started_;
  std::chrono::steady_clock::time_point t0_;
};

struct Caches {
  std::unique_ptr<FilteredSetCache> filtered;
  std::unique_ptr<EmbeddingCache> embeddings;

  explicit Caches(const RunConfig& c) {
    const auto dir = c.output.cache_dir;
    filtered = std::make_unique<FilteredSetCache>(dir.empty() ? fs::path{} : dir / "filtered_sets.json");
    embeddings = std::make_unique<EmbeddingCache>(dir.empty() ? fs::path{} : dir / "embeddings.bin");
  }

  void save() const {
    filtered->save();
    embeddings->save();
  }
};

inline std::size_t count_warnings(const std::vector<PromptOutcome>& prompts) {
  std::size_t n = 0;
  for (const auto& p : prompts)
    if (p.built) n += p.built->provenance.warnings.size();
  return n;
}

inline std::size_t count_errors(const std::vector<QuestionRecord>& records) {
  std::size_t n = 0;
  for (const auto& r : records) n += r.error.has_value();
  return n;
}

inline RunOutcome run_zero_shot_vqa(RunConfig cfg) {
  resolve_locations(cfg);
  validate(cfg);
  ManifestWriter manifest(cfg);
  fs::create_directories(cfg.output.dir);
  auto in = VqaInputs::load(cfg);
  require(!in.eval.empty(), ErrorCode::configuration, "zero-shot run: no questions to evaluate");
  Caches caches(cfg);
  LexiconLm lm(in.vocab.answers(), in.parses.get());
  TapcResources res{in.vocab, in.bank, in.parses.get(), lm, caches.filtered.get()};
  auto encoder = make_encoder(cfg.backend);

  const auto prompts = build_all_prompts(in.eval, cfg.tapc, res, cfg.workers);
  const auto records = predict_all(in.eval, prompts, *encoder, caches.embeddings.get(), cfg.workers);
  caches.save();

  const auto b = breakdown_of(records);
  RunOutcome out;
  out.errors = count_errors(records);
  out.warnings = count_warnings(prompts);
  out.metrics = {{"breakdown", breakdown_to_json(b)}, {"errors", out.errors}};
  const auto dir = cfg.output.dir;
  write_results(dir / "results.jsonl", records);
  write_json(dir / "breakdown.json", out.metrics);
  write_text(dir / "results.txt", format_vqa_table({{"zero-shot", b, {}}}));
  out.artifacts = {{"results", dir / "results.jsonl"}, {"breakdown", dir / "breakdown.json"}, {"table", dir / "results.txt"}};
  return manifest.finish(std::move(out));
}

/// Answered statements of the pool's masked-route examples, by question type.
inline std::map<std::string, std::vector<std::pair<std::string, std::string>>> filled_demonstrations(
    const FewShotPool& pool, const std::map<std::string, BuiltPrompts>& built) {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> out;  // type -> (qid, statement)
  for (const auto& [_, examples] : pool.ways)
    for (const auto& ex : examples) {
      auto it = built.find(ex.question_id);
      if (it == built.end() || it->second.provenance.route != "masked") continue;
      const auto& tmpl = std::get<MaskedTemplate>(it->second.set.source);
      try {
        out[ex.question_type].emplace_back(ex.question_id, fill_template(tmpl, ex.majority_answer));
      } catch (const Error&) {
      }
    }
  return out;
}

inline RunOutcome run_few_shot(RunConfig cfg) {
  resolve_locations(cfg);
  validate(cfg);
  ManifestWriter manifest(cfg);
  fs::create_directories(cfg.output.dir);
  auto in = VqaInputs::load(cfg);
  require(!in.eval.empty(), ErrorCode::configuration, "few-shot run: no validation questions");
  Caches caches(cfg);
  LexiconLm lm(in.vocab.answers(), in.parses.get());
  TapcResources res{in.vocab, in.bank, in.parses.get(), lm, caches.filtered.get()};
  RunOutcome out;

  auto pool = sample_pool(in.train, in.taxonomy, cfg.few_shot.shots, cfg.few_shot.seed);
  std::vector<VqaExample> pool_examples;
  for (const auto& [_, v] : pool.ways) pool_examples.insert(pool_examples.end(), v.begin(), v.end());

  // plain prompts first; they supply the answered demonstrations
  auto tapc_plain = cfg.tapc;
  tapc_plain.demo_filter = false;
  auto pool_prompts = build_all_prompts(pool_examples, tapc_plain, res, cfg.workers);
  std::map<std::string, BuiltPrompts> pool_built;
  for (std::size_t i = 0; i < pool_examples.size(); ++i)
    if (pool_prompts[i].built) pool_built.emplace(pool_examples[i].question_id, *pool_prompts[i].built);

  std::map<std::string, std::vector<std::string>> demos_by_question;
  std::function<const std::vector<std::string>*(const VqaExample&)> demos_for;
  if (cfg.tapc.demo_filter) {
    const auto filled = filled_demonstrations(pool, pool_built);
    std::map<std::string, std::vector<std::string>> by_type;
    for (const auto& [type, v] : filled)
      for (const auto& [qid, s] : v) by_type[type].push_back(s);
    for (const auto& ex : pool_examples) {
      auto& d = demos_by_question[ex.question_id];
      if (auto it = filled.find(ex.question_type); it != filled.end())
        for (const auto& [qid, s] : it->second)
          if (qid != ex.question_id) d.push_back(s);
    }
    demos_for = [by_type, &demos_by_question](const VqaExample& ex) -> const std::vector<std::string>* {
      if (auto it = demos_by_question.find(ex.question_id); it != demos_by_question.end()) return &it->second;
      static const std::vector<std::string> none;
      auto t = by_type.find(ex.question_type);
      return t == by_type.end() ? &none : &t->second;
    };
    pool_prompts = build_all_prompts(pool_examples, cfg.tapc, res, cfg.workers, demos_for);
    pool_built.clear();
    for (std::size_t i = 0; i < pool_examples.size(); ++i)
      if (pool_prompts[i].built) pool_built.emplace(pool_examples[i].question_id, *pool_prompts[i].built);
  }
  // examples without a prompt set cannot be trained on
  std::vector<std::string> dropped;
  for (auto& [way, v] : pool.ways)
    std::erase_if(v, [&](const VqaExample& ex) {
      const bool drop = !pool_built.count(ex.question_id);
      if (drop) dropped.push_back(ex.question_id);
      return drop;
    });
  std::erase_if(pool.ways, [](const auto& kv) { return kv.second.empty(); });
  PromptLookup lookup;
  for (const auto& [qid, b] : pool_built) lookup.emplace(qid, b.set);

  const auto eval_prompts =
      build_all_prompts(in.eval, cfg.tapc, res, cfg.workers, cfg.tapc.demo_filter ? demos_for : decltype(demos_for){});
  caches.save();

  const auto tc = train_config(cfg);
  const auto dir = cfg.output.dir;
  std::vector<TableRow> rows;
  nlohmann::json mode_metrics = nlohmann::json::object();
  for (auto mode : cfg.few_shot.modes) {
    const std::string m(to_string(mode));
    auto bundle = make_mlp_encoder(cfg.backend);
    const auto result = train_few_shot(*bundle, pool, lookup, tc, mode);
    const auto fp = Fnv1a{}.u64(config_fingerprint(cfg)).u64(tc.fingerprint()).str(m).value();
    const auto ckpt = cfg.output.checkpoint_dir / (m + "-" + to_hex(config_fingerprint(cfg)) + ".ckpt");
    const auto info = save_checkpoint(ckpt, *bundle, result.selection, fp);
    const auto records = predict_all(in.eval, eval_prompts, *bundle, nullptr, cfg.workers);
    const auto b = breakdown_of(records);
    out.errors += count_errors(records);

    nlohmann::json trace = {{"mode", m},
                            {"best_epoch", result.best_epoch},
                            {"selected_parameters", result.selection.selected},
                            {"selected_scalars", result.selection.counts.selected},
                            {"total_scalars", result.selection.counts.total},
                            {"checkpoint_scalars", info.scalars},
                            {"epochs", trace_to_json(result.trace)}};
    trace["best_query_score"] =
        result.best_query_score ? nlohmann::json(*result.best_query_score) : nlohmann::json(nullptr);
    write_json(dir / ("trace_" + m + ".json"), trace);
    write_results(dir / ("results_" + m + ".jsonl"), records);
    mode_metrics[m] = {{"breakdown", breakdown_to_json(b)},
                       {"best_epoch", result.best_epoch},
                       {"selected_scalars", result.selection.counts.selected},
                       {"errors", count_errors(records)}};
    rows.push_back({m, b, std::to_string(result.selection.counts.selected) + "/" +
                              std::to_string(result.selection.counts.total)});
    out.artifacts.push_back({"checkpoint_" + m, ckpt});
    out.artifacts.push_back({"trace_" + m, dir / ("trace_" + m + ".json")});
    out.artifacts.push_back({"results_" + m, dir / ("results_" + m + ".jsonl")});
  }
  out.warnings = count_warnings(eval_prompts) + count_warnings(pool_prompts) + dropped.size();
  nlohmann::json pool_json = {{"shots", pool.shots},
                              {"seed", pool.seed},
                              {"ways", pool.ways.size()},
                              {"examples", pool.total_examples()},
                              {"omitted_ways", pool.omitted_ways.size()},
                              {"dropped_without_prompts", dropped}};
  out.metrics = {{"modes", mode_metrics}, {"pool", pool_json}, {"errors", out.errors}};
  write_json(dir / "breakdown.json", out.metrics);
  write_text(dir / "results.txt", format_vqa_table(rows, "trainable"));
  out.artifacts.push_back({"breakdown", dir / "breakdown.json"});
  out.artifacts.push_back({"table", dir / "results.txt"});
  return manifest.finish(std::move(out));
}

inline RunOutcome run_entailment(RunConfig cfg) {
  resolve_locations(cfg);
  validate(cfg);
  ManifestWriter manifest(cfg);
  fs::create_directories(cfg.output.dir);
  const auto train = load_snli_ve_split(cfg.data.snli_ve_train);
  const auto valid = load_snli_ve_split(cfg.data.snli_ve_valid);
  const auto test = load_snli_ve_split(cfg.data.snli_ve_test);
  require(!train.empty(), ErrorCode::configuration, "entailment run: empty training split");
  Caches caches(cfg);
  auto encoder = make_encoder(cfg.backend);
  std::optional<MaskMode> control;
  if (cfg.entailment.control == ControlMode::black_image) control = MaskMode::black_image;
  if (cfg.entailment.control == ControlMode::zero_embedding) control = MaskMode::zero_embedding;
  const auto report =
      run_transfer(cfg.entailment.direction, train, valid, test, *encoder, entailment_options(cfg), control,
                   caches.embeddings.get());
  caches.save();

  RunOutcome out;
  auto j = report_to_json(report);
  j["control_mode"] = to_string(cfg.entailment.control);
  j["swapped_routing"] = cfg.entailment.direction == Direction::image_to_text;
  j["encoder_fingerprint"] = to_hex(encoder->fingerprint());
  out.metrics = j;
  const auto dir = cfg.output.dir;
  write_json(dir / "report.json", j);
  write_text(dir / "report.txt", format_entailment_table({{"entailment", report}}));
  out.artifacts = {{"report", dir / "report.json"}, {"table", dir / "report.txt"}};
  return manifest.finish(std::move(out));
}

inline RunOutcome run(const RunConfig& cfg) {
  switch (cfg.command) {
    case Command::zero_shot_vqa: return run_zero_shot_vqa(cfg);
    case Command::few_shot_vqa: return run_few_shot(cfg);
    case Command::entailment: return run_entailment(cfg);
  }
  fail(ErrorCode::configuration, "unknown command");
}

struct ReplayCheck {
  std::string name;
  bool identical = false;
};

struct ReplayOutcome {
  RunOutcome run;
  std::vector<ReplayCheck> checks;

  bool identical() const {
    for (const auto& c : checks)
      if (!c.identical) return false;
    return !checks.empty();
  }
};

/// Re-executes a manifest's resolved config into out_dir after checking that
/// every dataset file still hashes the same, then compares metric artifacts.
inline ReplayOutcome replay_manifest(const fs::path& manifest_file, const fs::path& out_dir) {
  const auto m = vlshot::detail::read_json_file(manifest_file);
  require(m.contains("config") && m.contains("artifacts"), ErrorCode::configuration,
          manifest_file.string() + ": not a run manifest");
  auto cfg = config_from_json(m.at("config"));
  for (const auto& [name, d] : m.at("datasets").items()) {
    const fs::path p = d.at("path").get<std::string>();
    require(fs::exists(p), ErrorCode::configuration, "replay: dataset '" + name + "' missing at " + p.string());
    require(file_digest(p) == d.at("fnv1a64").get<std::string>(), ErrorCode::configuration,
            "replay: dataset '" + name + "' changed since the run (" + p.string() + ")");
  }
  cfg.output.dir = out_dir;
  cfg.output.checkpoint_dir = out_dir / "checkpoints";
  ReplayOutcome r;
  r.run = run(cfg);
  std::map<std::string, fs::path> fresh;
  for (const auto& a : r.run.artifacts) fresh[a.name] = a.path;
  for (const auto& a : m.at("artifacts")) {
    if (!a.at("metric").get<bool>()) continue;
    const auto name = a.at("name").get<std::string>();
    auto it = fresh.find(name);
    r.checks.push_back({name, it != fresh.end() && file_digest(it->second) == a.at("fnv1a64").get<std::string>()});
  }
  return r;
}

/// Aligned table over finished runs (directories or manifest files).
inline std::string report_runs(const std::vector<fs::path>& runs) {
  std::vector<TableRow> vqa;
  std::vector<std::pair<std::string, TransferReport>> ent;
  auto from_json = [](const nlohmann::json& b) {
    Breakdown x;
    x.yes_no = b.at("yes_no").get<double>();
    x.number = b.at("number").get<double>();
    x.other = b.at("other").get<double>();
    x.all = b.at("all").get<double>();
    x.total = b.at("total").get<std::size_t>();
    return x;
  };
  for (auto p : runs) {
    if (fs::is_directory(p)) p /= "manifest.json";
    const auto m = vlshot::detail::read_json_file(p);
    require(m.contains("metrics") && m.contains("command"), ErrorCode::load, p.string() + ": not a run manifest");
    const auto label = p.parent_path().filename().string();
    const auto cmd = m.at("command").get<std::string>();
    const auto& met = m.at("metrics");
    if (cmd == "zero-shot-vqa") {
      vqa.push_back({label, from_json(met.at("breakdown")), {}});
    } else if (cmd == "few-shot-vqa") {
      for (const auto& [mode, v] : met.at("modes").items()) vqa.push_back({label + "/" + mode, from_json(v.at("breakdown")), {}});
    } else {
      TransferReport r;
      r.direction = parse_direction(met.at("direction").get<std::string>());
      r.valid_accuracy = met.at("valid_accuracy").get<double>();
      r.test_accuracy = met.at("test_accuracy").get<double>();
      r.majority = met.at("majority").get<double>();
      if (!met.at("control_accuracy").is_null()) r.control_accuracy = met.at("control_accuracy").get<double>();
      ent.emplace_back(label, r);
    }
  }
  std::string out;
  if (!vqa.empty()) out += format_vqa_table(vqa);
  if (!vqa.empty() && !ent.empty()) out += '\n';
  if (!ent.empty()) out += format_entailment_table(ent);
  return out;
}

}  // namespace vlshot::app
