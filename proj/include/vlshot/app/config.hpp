#pragma once

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/binor/selection.hpp"
#include "vlshot/binor/training.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"
#include "vlshot/core/text.hpp"
#include "vlshot/entailment/transfer.hpp"

#ifndef VLSHOT_DATA_DIR
#define VLSHOT_DATA_DIR "data"
#endif

namespace vlshot::app {

namespace fs = std::filesystem;
using nlohmann::json;

enum class Command { zero_shot_vqa, few_shot_vqa, entailment };

inline std::string_view to_string(Command c) {
  switch (c) {
    case Command::zero_shot_vqa: return "zero-shot-vqa";
    case Command::few_shot_vqa: return "few-shot-vqa";
    case Command::entailment: return "entailment";
  }
  return "zero-shot-vqa";
}

inline Command parse_command(std::string_view s) {
  if (s == "zero-shot-vqa") return Command::zero_shot_vqa;
  if (s == "few-shot-vqa") return Command::few_shot_vqa;
  if (s == "entailment") return Command::entailment;
  fail(ErrorCode::configuration, "unknown command '" + std::string(s) + "'");
}

struct DataPaths {
  fs::path questions, annotations;              // evaluation split
  fs::path train_questions, train_annotations;  // few-shot pool source
  fs::path vocab;
  fs::path taxonomy = fs::path(VLSHOT_DATA_DIR) / "question_types.txt";
  fs::path demonstrations = fs::path(VLSHOT_DATA_DIR) / "demonstrations.json";
  fs::path parses;  // CoNLL-U covering every question
  fs::path snli_ve_train, snli_ve_valid, snli_ve_test;
};

struct BackendConfig {
  std::string encoder = "mlp-mock";  // mlp-mock | table
  std::uint64_t encoder_seed = 0;
  std::size_t input_dim = 256, hidden_dim = 64, embed_dim = 32;
  fs::path encoder_table;  // JSON embedding table for "table"
  std::string lm = "lexicon-mock";
};

struct TapcConfig {
  double ensemble_threshold = -1.0;
  std::size_t k = 200;
  std::size_t template_demos = 0;  // demonstrations per generation request; 0 = all for the type
  std::size_t filter_demos = 16;
  bool demo_filter = false;  // filter with filled few-shot demonstrations
  bool no_answer_filter = false;
  bool qip_baseline = false;
  bool no_demo_template = false;
  bool no_parsing_template = false;
};

struct FewShotConfig {
  std::size_t shots = 1;
  std::size_t ways_per_epoch = 0;
  double proportion = 0.75;
  std::vector<TuneMode> modes = {TuneMode::binor};
  std::uint64_t seed = 0;
  std::size_t epochs = 30;
  std::size_t batch_size = 8;
  double learning_rate = 2e-5;
  double weight_decay = 0.001;
  double grad_clip = 2.0;
};

enum class ControlMode { none, black_image, zero_embedding };

inline std::string_view to_string(ControlMode m) {
  switch (m) {
    case ControlMode::none: return "none";
    case ControlMode::black_image: return "black_image";
    case ControlMode::zero_embedding: return "zero_embedding";
  }
  return "none";
}

inline ControlMode parse_control(std::string_view s) {
  if (s == "none") return ControlMode::none;
  if (s == "black_image") return ControlMode::black_image;
  if (s == "zero_embedding") return ControlMode::zero_embedding;
  fail(ErrorCode::configuration, "unknown masked control '" + std::string(s) + "'");
}

struct EntailmentConfig {
  Direction direction = Direction::text_to_image;
  std::vector<GridPoint> grid = default_entailment_grid();
  ControlMode control = ControlMode::black_image;
  std::vector<std::size_t> hidden = {1024, 128};
  std::size_t epochs = 20;
  std::uint64_t seed = 0;
};

struct OutputConfig {
  fs::path dir = "runs/latest";
  fs::path cache_dir;       // empty: VLSHOT_CACHE_ROOT, else no persistent cache
  fs::path checkpoint_dir;  // empty: VLSHOT_CHECKPOINT_ROOT, else <dir>/checkpoints
};

struct RunConfig {
  Command command = Command::zero_shot_vqa;
  DataPaths data;
  BackendConfig backend;
  TapcConfig tapc;
  FewShotConfig few_shot;
  EntailmentConfig entailment;
  OutputConfig output;
  std::size_t workers = 1;
  std::size_t limit = 0;  // evaluate the first n questions; 0 = all
};

namespace detail {

/// Reads one JSON object, remembering which keys were consumed so leftovers
/// can be rejected.
class StrictObject {
 public:
  StrictObject(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    require(j_.is_object(), ErrorCode::configuration, where_ + ": expected an object");
  }

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <typename T>
  void get(const char* key, T& out) {
    if (const auto* v = find(key)) {
      try {
        out = v->get<T>();
      } catch (const json::exception&) {
        fail(ErrorCode::configuration, path(key) + ": wrong type (" + v->dump() + ")");
      }
    }
  }

  void get_path(const char* key, fs::path& out, const fs::path& base) {
    std::string s;
    if (!find(key)) return;
    get(key, s);
    out = s.empty() ? fs::path{} : resolve(s, base);
  }

  std::string path(const char* key) const { return where_ + "/" + key; }

  void finish() const {
    for (const auto& [k, _] : j_.items())
      if (!seen_.count(k)) fail(ErrorCode::configuration, "unknown config key '" + where_ + "/" + k + "'");
  }

  static fs::path resolve(const std::string& s, const fs::path& base) {
    fs::path p(s);
    if (p.is_relative() && !base.empty()) p = base / p;
    return p.lexically_normal();
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

inline std::string path_string(const fs::path& p) { return p.string(); }

}  // namespace detail

/// Parses a config document. Relative paths resolve against base_dir.
inline RunConfig config_from_json(const json& j, const fs::path& base_dir = {}) {
  RunConfig c;
  detail::StrictObject root(j, "");
  std::string command;
  root.get("command", command);
  require(!command.empty(), ErrorCode::configuration, "config: 'command' is required");
  c.command = parse_command(command);
  root.get("workers", c.workers);
  root.get("limit", c.limit);

  if (const auto* d = root.find("data")) {
    detail::StrictObject o(*d, "/data");
    o.get_path("questions", c.data.questions, base_dir);
    o.get_path("annotations", c.data.annotations, base_dir);
    o.get_path("train_questions", c.data.train_questions, base_dir);
    o.get_path("train_annotations", c.data.train_annotations, base_dir);
    o.get_path("vocab", c.data.vocab, base_dir);
    o.get_path("taxonomy", c.data.taxonomy, base_dir);
    o.get_path("demonstrations", c.data.demonstrations, base_dir);
    o.get_path("parses", c.data.parses, base_dir);
    o.get_path("snli_ve_train", c.data.snli_ve_train, base_dir);
    o.get_path("snli_ve_valid", c.data.snli_ve_valid, base_dir);
    o.get_path("snli_ve_test", c.data.snli_ve_test, base_dir);
    o.finish();
  }
  if (const auto* b = root.find("backend")) {
    detail::StrictObject o(*b, "/backend");
    o.get("encoder", c.backend.encoder);
    o.get("encoder_seed", c.backend.encoder_seed);
    o.get("input_dim", c.backend.input_dim);
    o.get("hidden_dim", c.backend.hidden_dim);
    o.get("embed_dim", c.backend.embed_dim);
    o.get_path("encoder_table", c.backend.encoder_table, base_dir);
    o.get("lm", c.backend.lm);
    o.finish();
  }
  if (const auto* t = root.find("tapc")) {
    detail::StrictObject o(*t, "/tapc");
    o.get("ensemble_threshold", c.tapc.ensemble_threshold);
    o.get("k", c.tapc.k);
    o.get("template_demos", c.tapc.template_demos);
    o.get("filter_demos", c.tapc.filter_demos);
    o.get("demo_filter", c.tapc.demo_filter);
    o.get("no_answer_filter", c.tapc.no_answer_filter);
    o.get("qip_baseline", c.tapc.qip_baseline);
    o.get("no_demo_template", c.tapc.no_demo_template);
    o.get("no_parsing_template", c.tapc.no_parsing_template);
    o.finish();
  }
  if (const auto* f = root.find("few_shot")) {
    detail::StrictObject o(*f, "/few_shot");
    o.get("shots", c.few_shot.shots);
    o.get("ways_per_epoch", c.few_shot.ways_per_epoch);
    o.get("proportion", c.few_shot.proportion);
    if (const auto* m = o.find("mode")) {
      std::vector<std::string> names;
      if (m->is_string()) {
        names.push_back(m->get<std::string>());
      } else {
        o.get("mode", names);
      }
      c.few_shot.modes.clear();
      for (const auto& n : names) {
        try {
          c.few_shot.modes.push_back(parse_tune_mode(n));
        } catch (const Error& e) {
          fail(ErrorCode::configuration, o.path("mode") + ": " + e.what());
        }
      }
    }
    o.get("seed", c.few_shot.seed);
    o.get("epochs", c.few_shot.epochs);
    o.get("batch_size", c.few_shot.batch_size);
    o.get("learning_rate", c.few_shot.learning_rate);
    o.get("weight_decay", c.few_shot.weight_decay);
    o.get("grad_clip", c.few_shot.grad_clip);
    o.finish();
  }
  if (const auto* e = root.find("entailment")) {
    detail::StrictObject o(*e, "/entailment");
    std::string s;
    if (o.find("direction")) {
      o.get("direction", s);
      c.entailment.direction = parse_direction(s);
    }
    if (const auto* g = o.find("grid")) {
      if (g->is_string()) {
        require(g->get<std::string>() == "default", ErrorCode::configuration,
                "/entailment/grid: expected \"default\" or a list of points");
        c.entailment.grid = default_entailment_grid();
      } else {
        require(g->is_array(), ErrorCode::configuration, "/entailment/grid: expected a list");
        c.entailment.grid.clear();
        for (std::size_t i = 0; i < g->size(); ++i) {
          detail::StrictObject p((*g)[i], "/entailment/grid/" + std::to_string(i));
          GridPoint gp;
          p.get("learning_rate", gp.learning_rate);
          p.get("batch_size", gp.batch_size);
          p.get("dropout", gp.dropout);
          p.finish();
          c.entailment.grid.push_back(gp);
        }
      }
    }
    if (o.find("control")) {
      o.get("control", s);
      c.entailment.control = parse_control(s);
    }
    o.get("hidden", c.entailment.hidden);
    o.get("epochs", c.entailment.epochs);
    o.get("seed", c.entailment.seed);
    o.finish();
  }
  if (const auto* out = root.find("output")) {
    detail::StrictObject o(*out, "/output");
    o.get_path("dir", c.output.dir, base_dir);
    o.get_path("cache_dir", c.output.cache_dir, base_dir);
    o.get_path("checkpoint_dir", c.output.checkpoint_dir, base_dir);
    o.finish();
  }
  root.finish();
  return c;
}

inline json config_to_json(const RunConfig& c) {
  using detail::path_string;
  json modes = json::array();
  for (auto m : c.few_shot.modes) modes.push_back(to_string(m));
  json grid = json::array();
  for (const auto& g : c.entailment.grid)
    grid.push_back({{"learning_rate", g.learning_rate}, {"batch_size", g.batch_size}, {"dropout", g.dropout}});
  return {
      {"command", to_string(c.command)},
      {"workers", c.workers},
      {"limit", c.limit},
      {"data",
       {{"questions", path_string(c.data.questions)},
        {"annotations", path_string(c.data.annotations)},
        {"train_questions", path_string(c.data.train_questions)},
        {"train_annotations", path_string(c.data.train_annotations)},
        {"vocab", path_string(c.data.vocab)},
        {"taxonomy", path_string(c.data.taxonomy)},
        {"demonstrations", path_string(c.data.demonstrations)},
        {"parses", path_string(c.data.parses)},
        {"snli_ve_train", path_string(c.data.snli_ve_train)},
        {"snli_ve_valid", path_string(c.data.snli_ve_valid)},
        {"snli_ve_test", path_string(c.data.snli_ve_test)}}},
      {"backend",
       {{"encoder", c.backend.encoder},
        {"encoder_seed", c.backend.encoder_seed},
        {"input_dim", c.backend.input_dim},
        {"hidden_dim", c.backend.hidden_dim},
        {"embed_dim", c.backend.embed_dim},
        {"encoder_table", path_string(c.backend.encoder_table)},
        {"lm", c.backend.lm}}},
      {"tapc",
       {{"ensemble_threshold", c.tapc.ensemble_threshold},
        {"k", c.tapc.k},
        {"template_demos", c.tapc.template_demos},
        {"filter_demos", c.tapc.filter_demos},
        {"demo_filter", c.tapc.demo_filter},
        {"no_answer_filter", c.tapc.no_answer_filter},
        {"qip_baseline", c.tapc.qip_baseline},
        {"no_demo_template", c.tapc.no_demo_template},
        {"no_parsing_template", c.tapc.no_parsing_template}}},
      {"few_shot",
       {{"shots", c.few_shot.shots},
        {"ways_per_epoch", c.few_shot.ways_per_epoch},
        {"proportion", c.few_shot.proportion},
        {"mode", modes},
        {"seed", c.few_shot.seed},
        {"epochs", c.few_shot.epochs},
        {"batch_size", c.few_shot.batch_size},
        {"learning_rate", c.few_shot.learning_rate},
        {"weight_decay", c.few_shot.weight_decay},
        {"grad_clip", c.few_shot.grad_clip}}},
      {"entailment",
       {{"direction", to_string(c.entailment.direction)},
        {"grid", grid},
        {"control", to_string(c.entailment.control)},
        {"hidden", c.entailment.hidden},
        {"epochs", c.entailment.epochs},
        {"seed", c.entailment.seed}}},
      {"output",
       {{"dir", path_string(c.output.dir)},
        {"cache_dir", path_string(c.output.cache_dir)},
        {"checkpoint_dir", path_string(c.output.checkpoint_dir)}}},
  };
}

inline std::uint64_t config_fingerprint(const RunConfig& c) {
  auto j = config_to_json(c);
  j.erase("output");  // where results land does not change them
  j.erase("workers");
  return hash_text(j.dump());
}

inline TrainConfig train_config(const RunConfig& c) {
  TrainConfig t;
  t.epochs = c.few_shot.epochs;
  t.batch_size = c.few_shot.batch_size;
  t.learning_rate = c.few_shot.learning_rate;
  t.weight_decay = c.few_shot.weight_decay;
  t.grad_clip = c.few_shot.grad_clip;
  t.filtered_answers_k = c.tapc.k;
  t.seed = c.few_shot.seed;
  t.ways_per_epoch = c.few_shot.ways_per_epoch;
  t.proportion = c.few_shot.proportion;
  return t;
}

inline EntailmentOptions entailment_options(const RunConfig& c) {
  return EntailmentOptions{c.entailment.grid, c.entailment.hidden, c.entailment.epochs, c.entailment.seed};
}

/// Rejects flag combinations no ablation defines and missing inputs.
inline void validate(const RunConfig& c) {
  const auto& t = c.tapc;
  auto bad = [](const std::string& what) { fail(ErrorCode::configuration, "invalid config: " + what); };
  if (!std::isfinite(t.ensemble_threshold)) bad("tapc.ensemble_threshold must be finite");
  if (t.k < 1) bad("tapc.k must be at least 1");
  if (t.filter_demos < 1 || t.filter_demos > 16) bad("tapc.filter_demos must lie in [1, 16]");
  if (t.no_demo_template && t.no_parsing_template) bad("no_demo_template and no_parsing_template leave no template");
  if (t.qip_baseline && (t.no_demo_template || t.no_parsing_template))
    bad("qip_baseline replaces template generation; it cannot be combined with a template ablation");
  if (t.qip_baseline && t.demo_filter) bad("qip_baseline has no template to filter with demonstrations");
  if (t.no_answer_filter && t.demo_filter) bad("demo_filter requires answer filtering");
  if (c.workers < 1) bad("workers must be at least 1");
  if (c.backend.encoder != "mlp-mock" && c.backend.encoder != "table")
    bad("backend.encoder must be 'mlp-mock' or 'table' (got '" + c.backend.encoder + "')");
  if (c.backend.encoder == "table" && c.backend.encoder_table.empty()) bad("backend.encoder_table is required");
  if (c.backend.lm != "lexicon-mock") bad("backend.lm must be 'lexicon-mock' (got '" + c.backend.lm + "')");

  auto need = [&](const fs::path& p, const char* name) {
    if (p.empty()) bad(std::string("data.") + name + " is required for " + std::string(to_string(c.command)));
  };
  switch (c.command) {
    case Command::few_shot_vqa:
      need(c.data.train_questions, "train_questions");
      need(c.data.train_annotations, "train_annotations");
      if (c.backend.encoder != "mlp-mock") bad("few-shot training needs a differentiable encoder (mlp-mock)");
      if (c.few_shot.modes.empty()) bad("few_shot.mode lists no mode");
      if (c.few_shot.shots < 1) bad("few_shot.shots must be at least 1");
      try {
        train_config(c).validate();
      } catch (const Error& e) {
        bad(e.what());
      }
      [[fallthrough]];
    case Command::zero_shot_vqa:
      need(c.data.questions, "questions");
      need(c.data.annotations, "annotations");
      need(c.data.vocab, "vocab");
      if (!t.qip_baseline) need(c.data.parses, "parses");
      break;
    case Command::entailment:
      need(c.data.snli_ve_train, "snli_ve_train");
      need(c.data.snli_ve_valid, "snli_ve_valid");
      need(c.data.snli_ve_test, "snli_ve_test");
      if (c.entailment.grid.empty()) bad("entailment.grid is empty");
      if (c.entailment.epochs < 1) bad("entailment.epochs must be at least 1");
      for (const auto& g : c.entailment.grid)
        if (!(g.learning_rate > 0.0) || g.batch_size < 1 || g.dropout < 0.0 || g.dropout >= 1.0)
          bad("entailment.grid holds an invalid point");
      break;
  }
}

/// Sets a dotted key ("tapc.k") in a config document. The value is parsed as
/// JSON when possible, else kept as a string.
inline void apply_override(json& doc, const std::string& dotted, const std::string& value) {
  require(!dotted.empty(), ErrorCode::configuration, "empty override key");
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = dotted.find('.', start);
    const auto key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    require(!key.empty(), ErrorCode::configuration, "malformed override key '" + dotted + "'");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      json v = json::parse(value, nullptr, false);
      (*node)[key] = v.is_discarded() ? json(value) : v;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

inline json read_config_document(const fs::path& file) {
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open config " + file.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::configuration, file.string() + ": " + e.what());
  }
}

inline fs::path env_path(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? fs::path(v) : fs::path{};
}

/// Fills cache/checkpoint locations from the environment when the config
/// leaves them empty.
inline void resolve_locations(RunConfig& c) {
  if (c.output.cache_dir.empty()) c.output.cache_dir = env_path("VLSHOT_CACHE_ROOT");
  if (c.output.checkpoint_dir.empty()) {
    const auto root = env_path("VLSHOT_CHECKPOINT_ROOT");
    c.output.checkpoint_dir = root.empty() ? c.output.dir / "checkpoints" : root;
  }
}

}  // namespace vlshot::app
