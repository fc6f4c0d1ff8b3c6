#pragma once

#include <algorithm>
#include <array>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vlshot/clip/bundle.hpp"
#include "vlshot/clip/params.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"
#include "vlshot/core/text.hpp"

namespace vlshot {

// Learnable-parameter layouts of the public CLIP checkpoints, rebuilt from
// the model definitions (buffers such as BatchNorm running statistics and
// the logit scale are excluded).

namespace detail {

struct LayoutBuilder {
  std::vector<ParamInfo> params;

  void add(std::string name, Shape shape) {
    const auto kind = tag_by_name(name);
    params.push_back({std::move(name), std::move(shape), kind, true});
  }
  void norm(const std::string& prefix, std::size_t n) {
    add(prefix + ".weight", {n});
    add(prefix + ".bias", {n});
  }
  void linear(const std::string& prefix, std::size_t out, std::size_t in) {
    add(prefix + ".weight", {out, in});
    add(prefix + ".bias", {out});
  }
  void residual_attention_block(const std::string& p, std::size_t w) {
    add(p + ".attn.in_proj_weight", {3 * w, w});
    add(p + ".attn.in_proj_bias", {3 * w});
    linear(p + ".attn.out_proj", w, w);
    norm(p + ".ln_1", w);
    linear(p + ".mlp.c_fc", 4 * w, w);
    linear(p + ".mlp.c_proj", w, 4 * w);
    norm(p + ".ln_2", w);
  }
  void text_tower(std::size_t width, std::size_t layers, std::size_t embed) {
    add("token_embedding.weight", {49408, width});
    add("positional_embedding", {77, width});
    for (std::size_t i = 0; i < layers; ++i) residual_attention_block("transformer.resblocks." + std::to_string(i), width);
    norm("ln_final", width);
    add("text_projection", {width, embed});
  }
};

}  // namespace detail

struct ResNetSpec {
  std::size_t width;
  std::array<std::size_t, 4> layers;
  std::size_t input_resolution;
  std::size_t embed_dim;
  std::size_t text_width;
};

struct VitSpec {
  std::size_t width;
  std::size_t layers;
  std::size_t patch;
  std::size_t input_resolution;
  std::size_t embed_dim;
  std::size_t text_width;
};

inline std::vector<ParamInfo> modified_resnet_layout(const ResNetSpec& s) {
  detail::LayoutBuilder b;
  const auto w = s.width;
  b.add("visual.conv1.weight", {w / 2, 3, 3, 3});
  b.norm("visual.bn1", w / 2);
  b.add("visual.conv2.weight", {w / 2, w / 2, 3, 3});
  b.norm("visual.bn2", w / 2);
  b.add("visual.conv3.weight", {w, w / 2, 3, 3});
  b.norm("visual.bn3", w);
  std::size_t inplanes = w;
  for (std::size_t li = 0; li < 4; ++li) {
    const std::size_t planes = w << li;
    for (std::size_t bi = 0; bi < s.layers[li]; ++bi) {
      const auto p = "visual.layer" + std::to_string(li + 1) + "." + std::to_string(bi);
      b.add(p + ".conv1.weight", {planes, inplanes, 1, 1});
      b.norm(p + ".bn1", planes);
      b.add(p + ".conv2.weight", {planes, planes, 3, 3});
      b.norm(p + ".bn2", planes);
      b.add(p + ".conv3.weight", {4 * planes, planes, 1, 1});
      b.norm(p + ".bn3", 4 * planes);
      if (bi == 0) {
        b.add(p + ".downsample.0.weight", {4 * planes, inplanes, 1, 1});
        b.norm(p + ".downsample.1", 4 * planes);
      }
      inplanes = 4 * planes;
    }
  }
  const auto e = 32 * w;
  const auto spacial = s.input_resolution / 32;
  b.add("visual.attnpool.positional_embedding", {spacial * spacial + 1, e});
  b.linear("visual.attnpool.k_proj", e, e);
  b.linear("visual.attnpool.q_proj", e, e);
  b.linear("visual.attnpool.v_proj", e, e);
  b.linear("visual.attnpool.c_proj", s.embed_dim, e);
  b.text_tower(s.text_width, 12, s.embed_dim);
  return b.params;
}

inline std::vector<ParamInfo> vit_layout(const VitSpec& s) {
  detail::LayoutBuilder b;
  const auto w = s.width;
  const auto grid = s.input_resolution / s.patch;
  b.add("visual.class_embedding", {w});
  b.add("visual.positional_embedding", {grid * grid + 1, w});
  b.add("visual.conv1.weight", {w, 3, s.patch, s.patch});
  b.norm("visual.ln_pre", w);
  for (std::size_t i = 0; i < s.layers; ++i) b.residual_attention_block("visual.transformer.resblocks." + std::to_string(i), w);
  b.norm("visual.ln_post", w);
  b.add("visual.proj", {w, s.embed_dim});
  b.text_tower(s.text_width, 12, s.embed_dim);
  return b.params;
}

/// Layouts for the named public checkpoints ("RN101", "RN50x16", "ViT-B/16").
inline std::vector<ParamInfo> clip_layout(const std::string& name) {
  if (name == "RN101") return modified_resnet_layout({64, {3, 4, 23, 3}, 224, 512, 512});
  if (name == "RN50x16") return modified_resnet_layout({96, {6, 8, 18, 8}, 384, 768, 768});
  if (name == "ViT-B/16") return vit_layout({768, 12, 16, 224, 512, 512});
  fail(ErrorCode::configuration, "unknown CLIP layout '" + name + "' (known: RN101, RN50x16, ViT-B/16)");
}

/// Reads "name d0,d1,..." lines (a scalar has shape "-"); '#' starts a comment.
inline std::vector<ParamInfo> read_param_listing(const std::filesystem::path& file) {
  std::ifstream in(file);
  require(static_cast<bool>(in), ErrorCode::io, "cannot open parameter listing " + file.string());
  std::vector<ParamInfo> out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    line = text::trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string name, dims;
    ss >> name >> dims;
    require(!name.empty() && !dims.empty(), ErrorCode::load,
            file.string() + ":" + std::to_string(lineno) + ": expected '<name> <shape>'");
    Shape shape;
    if (dims != "-") {
      std::stringstream ds(dims);
      for (std::string d; std::getline(ds, d, ',');) {
        try {
          shape.push_back(static_cast<std::size_t>(std::stoull(d)));
        } catch (const std::exception&) {
          fail(ErrorCode::load, file.string() + ":" + std::to_string(lineno) + ": bad dimension '" + d + "'");
        }
      }
    }
    out.push_back({name, shape, tag_by_name(name), true});
  }
  return out;
}

/// Parameter enumeration without weights; used for selection accounting
/// against real checkpoints. Encoding is unavailable.
class LayoutBundle : public EncoderBundle {
 public:
  LayoutBundle(std::string id, std::vector<ParamInfo> params, std::size_t embed_dim)
      : id_(std::move(id)), params_(std::move(params)), dim_(embed_dim) {}

  static LayoutBundle named(const std::string& name) {
    const std::size_t dim = name == "RN50x16" ? 768 : 512;
    return LayoutBundle(name, clip_layout(name), dim);
  }

  std::string id() const override { return id_; }
  std::size_t embed_dim() const override { return dim_; }
  std::vector<ParamInfo> parameters() const override { return params_; }
  std::uint64_t fingerprint() const override {
    Fnv1a h;
    for (const auto& p : params_) h.str(p.name).u64(p.trainable);
    return h.value();
  }
  void set_trainable(const std::vector<std::string>& names) override {
    for (auto& p : params_) p.trainable = std::find(names.begin(), names.end(), p.name) != names.end();
  }

 protected:
  std::vector<Vector> do_encode_text(std::span<const std::string>) override { unavailable(); }
  std::vector<Vector> do_encode_image(std::span<const std::string>) override { unavailable(); }

 private:
  [[noreturn]] void unavailable() const {
    fail(ErrorCode::adapter, id_ + ": layout-only bundle has no weights; use an external backend to encode");
  }

  std::string id_;
  std::vector<ParamInfo> params_;
  std::size_t dim_;
};

}  // namespace vlshot
