#pragma once

#include <filesystem>
#include <fstream>
#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "vlshot/app/config.hpp"
#include "vlshot/clip/mlp_backend.hpp"
#include "vlshot/clip/table_backend.hpp"
#include "vlshot/dataset/loaders.hpp"

namespace vlshot::app {

/// Embedding table file: {"id": ..., "dim": d, "text": {key: [..]}, "image": {key: [..]}}.
inline std::shared_ptr<TableEncoder> load_table_encoder(const fs::path& file) {
  const auto j = vlshot::detail::read_json_file(file);
  try {
    auto enc = std::make_shared<TableEncoder>(j.value("id", std::string("table")), j.at("dim").get<std::size_t>());
    for (const auto& [k, v] : j.at("text").items()) enc->set_text(k, v.get<Vector>());
    for (const auto& [k, v] : j.at("image").items()) enc->set_image(k, v.get<Vector>());
    return enc;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::load, file.string() + ": " + e.what());
  } catch (const Error& e) {
    fail(ErrorCode::load, file.string() + ": " + e.what());
  }
}

inline void save_table_encoder(const TableEncoder& enc, const fs::path& file) {
  nlohmann::json text = nlohmann::json::object(), image = nlohmann::json::object();
  for (const auto& [k, v] : enc.text_table()) text[k] = v;
  for (const auto& [k, v] : enc.image_table()) image[k] = v;
  std::ofstream out(file);
  require(static_cast<bool>(out), ErrorCode::io, "cannot write " + file.string());
  out << nlohmann::json{{"id", enc.id()}, {"dim", enc.embed_dim()}, {"text", text}, {"image", image}}.dump();
}

inline std::unique_ptr<MlpDualEncoder> make_mlp_encoder(const BackendConfig& b) {
  MlpEncoderConfig mc;
  mc.input_dim = b.input_dim;
  mc.hidden_dim = b.hidden_dim;
  mc.embed_dim = b.embed_dim;
  mc.seed = b.encoder_seed;
  return std::make_unique<MlpDualEncoder>(mc);
}

inline std::shared_ptr<EncoderBundle> make_encoder(const BackendConfig& b) {
  if (b.encoder == "table") return load_table_encoder(b.encoder_table);
  if (b.encoder == "mlp-mock") return make_mlp_encoder(b);
  fail(ErrorCode::configuration, "unknown encoder backend '" + b.encoder + "'");
}

}  // namespace vlshot::app
