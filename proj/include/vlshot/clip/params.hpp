#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "vlshot/core/error.hpp"

namespace vlshot {

enum class ParamKind { weight, bias, norm_gain, norm_shift, untagged };

inline std::string_view to_string(ParamKind k) {
  switch (k) {
    case ParamKind::weight: return "weight";
    case ParamKind::bias: return "bias";
    case ParamKind::norm_gain: return "norm_gain";
    case ParamKind::norm_shift: return "norm_shift";
    case ParamKind::untagged: return "untagged";
  }
  return "?";
}

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) out += (i ? "," : "") + std::to_string(shape[i]);
  return out + "]";
}

struct ParamInfo {
  std::string name;
  Shape shape;
  ParamKind kind = ParamKind::untagged;
  bool trainable = true;

  std::size_t size() const { return numel(shape); }
};

/// True when the module owning `name` is a normalization layer under the
/// CLIP naming scheme (bn1, ln_post, ln_1, ...).
inline bool is_norm_module(std::string_view param_name) {
  static const std::regex norm(R"((^|\.)(bn\d*|ln_\w+|ln\d*|norm\d*|layernorm\w*)$)");
  const auto dot = param_name.rfind('.');
  if (dot == std::string_view::npos) return false;
  return std::regex_search(std::string(param_name.substr(0, dot)), norm);
}

inline bool is_downsample_norm(std::string_view param_name) {
  static const std::regex ds(R"((^|\.)downsample\.1\.(weight|bias)$)");
  return std::regex_search(std::string(param_name), ds);
}

/// Kind tag derived from a state-dict name. Anything that is neither a
/// weight, a bias, nor a normalization affine term is left untagged.
///
/// The BatchNorm inside a residual downsample branch is registered as
/// "downsample.1", so name-based selection sees its gain as a plain weight
/// and its shift as a plain bias; the published counts follow that.
inline ParamKind tag_by_name(std::string_view name) {
  const auto dot = name.rfind('.');
  const auto leaf = dot == std::string_view::npos ? name : name.substr(dot + 1);
  if (is_downsample_norm(name)) return leaf == "bias" ? ParamKind::bias : ParamKind::weight;
  const bool norm = is_norm_module(name);
  if (leaf == "bias") return norm ? ParamKind::norm_shift : ParamKind::bias;
  if (leaf == "weight") return norm ? ParamKind::norm_gain : ParamKind::weight;
  if (leaf == "in_proj_weight") return ParamKind::weight;
  if (leaf == "in_proj_bias") return ParamKind::bias;
  if (leaf == "proj" || leaf == "text_projection" || leaf == "positional_embedding" ||
      leaf == "class_embedding")
    return ParamKind::weight;
  return ParamKind::untagged;
}

}  // namespace vlshot
