#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vlshot/clip/bundle.hpp"
#include "vlshot/clip/params.hpp"
#include "vlshot/core/error.hpp"

namespace vlshot {

enum class TuneMode { binor, bitfit, full };

inline std::string_view to_string(TuneMode m) {
  switch (m) {
    case TuneMode::binor: return "binor";
    case TuneMode::bitfit: return "bitfit";
    case TuneMode::full: return "full";
  }
  return "?";
}

inline TuneMode parse_tune_mode(std::string_view s) {
  if (s == "binor") return TuneMode::binor;
  if (s == "bitfit") return TuneMode::bitfit;
  if (s == "full") return TuneMode::full;
  fail(ErrorCode::configuration, "unknown fine-tuning mode '" + std::string(s) + "' (binor, bitfit, full)");
}

inline bool selects(TuneMode mode, ParamKind kind) {
  switch (mode) {
    case TuneMode::full: return kind != ParamKind::untagged;
    case TuneMode::binor: return kind == ParamKind::bias || kind == ParamKind::norm_gain || kind == ParamKind::norm_shift;
    case TuneMode::bitfit: return kind == ParamKind::bias || kind == ParamKind::norm_shift;
  }
  return false;
}

/// Scalar counts. "bias" covers every bias-like vector including the
/// normalization shift; "norm" covers gain and shift, so the shift is counted
/// in both and removed once from the BiNor total.
struct SelectionCounts {
  std::size_t bias = 0;
  std::size_t norm = 0;
  std::size_t shared_shift = 0;
  std::size_t selected = 0;
  std::size_t total = 0;

  std::size_t binor() const { return bias + norm - shared_shift; }
};

struct TrainableSelection {
  TuneMode mode = TuneMode::binor;
  std::vector<std::string> selected;
  SelectionCounts counts;

  bool contains(const std::string& name) const {
    for (const auto& s : selected)
      if (s == name) return true;
    return false;
  }
};

inline SelectionCounts count_parameters(const std::vector<ParamInfo>& params, TuneMode mode) {
  SelectionCounts c;
  for (const auto& p : params) {
    const auto n = p.size();
    c.total += n;
    if (p.kind == ParamKind::bias || p.kind == ParamKind::norm_shift) c.bias += n;
    if (p.kind == ParamKind::norm_gain || p.kind == ParamKind::norm_shift) c.norm += n;
    if (p.kind == ParamKind::norm_shift) c.shared_shift += n;
    if (selects(mode, p.kind)) c.selected += n;
  }
  return c;
}

/// Marks the mode's parameters trainable and everything else frozen. An
/// untagged parameter freezes the whole bundle and raises a tagging error.
inline TrainableSelection select_trainable(EncoderBundle& bundle, TuneMode mode) {
  const auto params = bundle.parameters();
  for (const auto& p : params) {
    if (p.kind == ParamKind::untagged) {
      bundle.set_trainable({});
      fail(ErrorCode::tagging, bundle.id() + ": parameter '" + p.name + "' has no kind tag; nothing is trainable");
    }
  }
  TrainableSelection sel;
  sel.mode = mode;
  for (const auto& p : params)
    if (selects(mode, p.kind)) sel.selected.push_back(p.name);
  sel.counts = count_parameters(params, mode);
  bundle.set_trainable(sel.selected);
  return sel;
}

}  // namespace vlshot
