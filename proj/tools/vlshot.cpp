// vlshot: zero-shot / few-shot VQA with prompted dual encoders, entailment
// transfer, run manifests and replay.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vlshot/app/config.hpp"
#include "vlshot/app/runner.hpp"
#include "vlshot/app/synthetic.hpp"
#include "vlshot/binor/selection.hpp"
#include "vlshot/clip/layouts.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vlshot;

namespace {

int report_error(const std::string& stage, std::string_view code, const std::string& message, int exit_code) {
  const json j = {{"status", "error"}, {"stage", stage}, {"code", code}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return exit_code;
}

struct RunFlags {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
  std::optional<std::size_t> workers, limit, k, shots;
  std::optional<double> threshold;
  std::optional<std::uint64_t> seed, encoder_seed;
  std::vector<std::string> modes;
  std::string direction, control;
  bool no_answer_filter = false, qip_baseline = false, no_demo_template = false, no_parsing_template = false,
       demo_filter = false;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("-c,--config", f.config, "run config (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--set", f.sets, "override a config key, e.g. --set tapc.k=50");
  cmd->add_option("-o,--out", f.out, "output directory");
  cmd->add_option("--workers", f.workers, "parallel workers for per-question inference");
  cmd->add_option("--limit", f.limit, "evaluate only the first n questions");
  cmd->add_option("--k", f.k, "answers kept by the filter");
  cmd->add_option("--threshold", f.threshold, "ensemble confidence threshold");
  cmd->add_option("--shots", f.shots, "K shots per way");
  cmd->add_option("--seed", f.seed, "few-shot / entailment seed");
  cmd->add_option("--encoder-seed", f.encoder_seed, "mock encoder seed");
  cmd->add_option("--mode", f.modes, "fine-tuning mode(s): binor, bitfit, full");
  cmd->add_option("--direction", f.direction, "text->image or image->text");
  cmd->add_option("--control", f.control, "masked control: black_image, zero_embedding, none");
  cmd->add_flag("--no-answer-filter", f.no_answer_filter, "ablation: keep every vocabulary answer");
  cmd->add_flag("--qip-baseline", f.qip_baseline, "question-irrelevant prompts over all answers");
  cmd->add_flag("--no-demo-template", f.no_demo_template, "ablation: drop generated templates");
  cmd->add_flag("--no-parsing-template", f.no_parsing_template, "ablation: drop parsed templates");
  cmd->add_flag("--demo-filter", f.demo_filter, "filter answers with answered few-shot demonstrations");
}

app::RunConfig build_config(const std::string& command, const RunFlags& f) {
  json doc = json::object();
  fs::path base;
  if (!f.config.empty()) {
    doc = app::read_config_document(f.config);
    base = fs::absolute(f.config).parent_path();
  }
  if (doc.contains("command") && doc["command"] != command)
    fail(ErrorCode::configuration, "config declares command '" + doc["command"].dump() + "' but '" + command + "' was run");
  doc["command"] = command;
  auto set = [&](const std::string& key, const json& v) { app::apply_override(doc, key, v.dump()); };
  for (const auto& s : f.sets) {
    const auto eq = s.find('=');
    require(eq != std::string::npos, ErrorCode::configuration, "--set expects key=value, got '" + s + "'");
    app::apply_override(doc, s.substr(0, eq), s.substr(eq + 1));
  }
  if (!f.out.empty()) set("output.dir", fs::absolute(f.out).string());
  if (f.workers) set("workers", *f.workers);
  if (f.limit) set("limit", *f.limit);
  if (f.k) set("tapc.k", *f.k);
  if (f.threshold) set("tapc.ensemble_threshold", *f.threshold);
  if (f.shots) set("few_shot.shots", *f.shots);
  if (f.seed) {
    if (command == "entailment")
      set("entailment.seed", *f.seed);
    else
      set("few_shot.seed", *f.seed);
  }
  if (f.encoder_seed) set("backend.encoder_seed", *f.encoder_seed);
  if (!f.modes.empty()) set("few_shot.mode", f.modes);
  if (!f.direction.empty()) set("entailment.direction", f.direction);
  if (!f.control.empty()) set("entailment.control", f.control);
  if (f.no_answer_filter) set("tapc.no_answer_filter", true);
  if (f.qip_baseline) set("tapc.qip_baseline", true);
  if (f.no_demo_template) set("tapc.no_demo_template", true);
  if (f.no_parsing_template) set("tapc.no_parsing_template", true);
  if (f.demo_filter) set("tapc.demo_filter", true);
  return app::config_from_json(doc, base);
}

void print_outcome(const app::RunOutcome& r) {
  for (const auto& a : r.artifacts)
    if (a.name == "table") {
      std::ifstream in(a.path);
      std::cout << in.rdbuf();
    }
  std::cout << "manifest: " << r.manifest.string() << '\n';
  if (r.errors) std::cout << "per-question errors: " << r.errors << " (see results records)\n";
}

int params_report(const std::string& layout, const std::string& listing) {
  const auto params = listing.empty() ? clip_layout(layout) : read_param_listing(listing);
  const auto c = count_parameters(params, TuneMode::binor);
  std::printf("%-10s %12s %12s %12s %12s\n", "model", "bias", "norm", "binor", "total");
  std::printf("%-10s %12zu %12zu %12zu %12zu\n", (listing.empty() ? layout : fs::path(listing).filename().string()).c_str(),
              c.bias, c.norm, c.binor(), c.total);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Prompted zero-/few-shot VQA and cross-modal entailment transfer"};
  cli.require_subcommand(1);

  std::map<std::string, RunFlags> flags;
  std::map<std::string, CLI::App*> runs;
  for (const char* name : {"zero-shot-vqa", "few-shot-vqa", "entailment"}) {
    auto* cmd = cli.add_subcommand(name, std::string("run ") + name);
    add_run_flags(cmd, flags[name]);
    runs[name] = cmd;
  }

  std::string manifest, replay_out;
  auto* replay = cli.add_subcommand("replay", "re-run a manifest and compare metric files");
  replay->add_option("manifest", manifest, "manifest.json of a finished run")->required()->check(CLI::ExistingFile);
  replay->add_option("-o,--out", replay_out, "output directory (default: <run>/replay)");

  std::vector<std::string> report_runs;
  std::string layout, listing;
  auto* report = cli.add_subcommand("report", "tabulate finished runs, or count parameters of a layout");
  report->add_option("runs", report_runs, "run directories or manifests");
  report->add_option("--params", layout, "CLIP layout name: RN101, RN50x16, ViT-B/16");
  report->add_option("--listing", listing, "parameter listing file ('name d0,d1,...' per line)");

  std::string synth_dir;
  app::SyntheticOptions synth;
  auto* make = cli.add_subcommand("make-synthetic", "write a toy corpus and ready-to-run configs");
  make->add_option("dir", synth_dir, "output directory")->required();
  make->add_option("--seed", synth.seed, "generator seed");
  make->add_option("--train-images", synth.train_images, "scenes in the train split");
  make->add_option("--val-images", synth.val_images, "scenes in the val split");

  CLI11_PARSE(cli, argc, argv);

  std::string stage = "config";
  try {
    for (const auto& [name, cmd] : runs) {
      if (!cmd->parsed()) continue;
      auto cfg = build_config(name, flags[name]);
      stage = name;
      print_outcome(app::run(cfg));
      return 0;
    }
    if (replay->parsed()) {
      stage = "replay";
      const fs::path out = replay_out.empty() ? fs::path(manifest).parent_path() / "replay" : fs::path(replay_out);
      const auto r = app::replay_manifest(manifest, out);
      for (const auto& c : r.checks) std::cout << "replay " << c.name << ": " << (c.identical ? "identical" : "DIFFERS") << '\n';
      std::cout << "manifest: " << r.run.manifest.string() << '\n';
      return r.identical() ? 0 : 3;
    }
    if (report->parsed()) {
      stage = "report";
      if (!layout.empty() || !listing.empty()) return params_report(layout, listing);
      require(!report_runs.empty(), ErrorCode::configuration, "report: give run directories or --params");
      std::cout << app::report_runs({report_runs.begin(), report_runs.end()});
      return 0;
    }
    if (make->parsed()) {
      stage = "make-synthetic";
      const auto files = app::write_synthetic(synth_dir, synth);
      for (const auto& f : files.written) std::cout << f.string() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    return report_error(stage, to_string(e.code()), e.what(), e.code() == ErrorCode::configuration ? 2 : 1);
  } catch (const std::exception& e) {
    return report_error(stage, "unexpected", e.what(), 1);
  }
  return 0;
}
