#pragma once

#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/binor/selection.hpp"
#include "vlshot/binor/training.hpp"
#include "vlshot/clip/differentiable.hpp"
#include "vlshot/core/binary_io.hpp"
#include "vlshot/core/error.hpp"

namespace vlshot {

// Layout: magic "VLCKPT01", u64 config fingerprint, f64 logit scale,
// u32 tensor count, then per tensor: name, u32 rank, u64 dims, f64 values.

inline constexpr char kCheckpointMagic[8] = {'V', 'L', 'C', 'K', 'P', 'T', '0', '1'};

struct CheckpointInfo {
  std::uint64_t config_fingerprint = 0;
  double logit_scale = 0.0;
  std::vector<std::string> names;
  std::size_t scalars = 0;
};

/// Writes only the selected tensors and the logit scale.
inline CheckpointInfo save_checkpoint(const std::filesystem::path& file, const DifferentiableBundle& bundle,
                                      const TrainableSelection& sel, std::uint64_t config_fingerprint) {
  if (file.has_parent_path()) std::filesystem::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write checkpoint " + file.string());
  CheckpointInfo info{config_fingerprint, bundle.logit_scale(), {}, 0};
  std::vector<const Tensor*> chosen;
  for (const auto& t : bundle.tensors())
    if (sel.contains(t.info.name)) chosen.push_back(&t);
  out.write(kCheckpointMagic, 8);
  bin::put_u64(out, config_fingerprint);
  bin::put_f64(out, bundle.logit_scale());
  bin::put_u32(out, static_cast<std::uint32_t>(chosen.size()));
  for (const auto* t : chosen) {
    bin::put_str(out, t->info.name);
    bin::put_u32(out, static_cast<std::uint32_t>(t->info.shape.size()));
    for (auto d : t->info.shape) bin::put_u64(out, d);
    for (double x : t->data) bin::put_f64(out, x);
    info.names.push_back(t->info.name);
    info.scalars += t->data.size();
  }
  require(static_cast<bool>(out), ErrorCode::io, "error writing checkpoint " + file.string());
  return info;
}

/// Loads tensors into the bundle by name; shapes must match. A supplied
/// fingerprint must equal the stored one.
inline CheckpointInfo load_checkpoint(const std::filesystem::path& file, DifferentiableBundle& bundle,
                                      std::optional<std::uint64_t> expect_fingerprint = {}) {
  std::ifstream in(file, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open checkpoint " + file.string());
  bin::Reader r(in, file.string());
  char magic[8];
  r.read(magic, 8);
  require(std::memcmp(magic, kCheckpointMagic, 8) == 0, ErrorCode::load, file.string() + ": not a checkpoint");
  CheckpointInfo info;
  info.config_fingerprint = r.u64();
  if (expect_fingerprint)
    require(*expect_fingerprint == info.config_fingerprint, ErrorCode::load,
            file.string() + ": config fingerprint " + to_hex(info.config_fingerprint) + " does not match " +
                to_hex(*expect_fingerprint));
  info.logit_scale = r.f64();
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name = r.str();
    Shape shape(r.u32());
    for (auto& d : shape) d = r.u64();
    auto& t = bundle.tensor(name);
    require(t.info.shape == shape, ErrorCode::load,
            file.string() + ": shape " + shape_string(shape) + " for '" + name + "' does not match " +
                shape_string(t.info.shape));
    for (auto& x : t.data) x = r.f64();
    info.names.push_back(name);
    info.scalars += t.data.size();
  }
  bundle.set_logit_scale(info.logit_scale);
  return info;
}

inline nlohmann::json trace_to_json(const TrainTrace& trace) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : trace.epochs) {
    nlohmann::json j = {{"epoch", e.epoch},
                        {"support_loss", e.support_loss},
                        {"logit_scale", e.logit_scale},
                        {"update_norm", e.update_norm},
                        {"steps", e.steps},
                        {"injections", e.injections},
                        {"skipped", e.skipped}};
    j["query_score"] = e.query_score ? nlohmann::json(*e.query_score) : nlohmann::json(nullptr);
    arr.push_back(std::move(j));
  }
  return arr;
}

}  // namespace vlshot
