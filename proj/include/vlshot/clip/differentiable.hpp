#pragma once

#include <algorithm>
#include <span>
#include <string>
#include <vector>

#include "vlshot/clip/bundle.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"

namespace vlshot {

struct Tensor {
  ParamInfo info;
  Vector data;
};

/// A bundle whose parameters can be read, written and differentiated.
///
/// forward() records activations on an internal tape and returns a slot;
/// backward() accumulates parameter gradients for that slot into `grads`
/// (one vector per tensor, same order as tensors()).
class DifferentiableBundle : public EncoderBundle {
 public:
  virtual std::vector<Tensor>& tensors() = 0;
  virtual const std::vector<Tensor>& tensors() const = 0;

  virtual std::size_t forward(Modality m, const std::string& input, Vector& raw) = 0;
  virtual void backward(std::size_t slot, std::span<const double> d_raw, std::vector<Vector>& grads) const = 0;
  virtual void clear_tape() = 0;

  std::vector<ParamInfo> parameters() const override {
    std::vector<ParamInfo> out;
    for (const auto& t : tensors()) out.push_back(t.info);
    return out;
  }

  std::uint64_t fingerprint() const override {
    Fnv1a h;
    for (const auto& t : tensors()) h.str(t.info.name).f64s(t.data);
    return h.value();
  }

  void set_trainable(const std::vector<std::string>& names) override {
    for (auto& t : tensors()) t.info.trainable = std::find(names.begin(), names.end(), t.info.name) != names.end();
  }

  std::vector<Vector> zero_grads() const {
    std::vector<Vector> g;
    for (const auto& t : tensors()) g.emplace_back(t.data.size(), 0.0);
    return g;
  }

  Tensor& tensor(const std::string& name) {
    for (auto& t : tensors())
      if (t.info.name == name) return t;
    fail(ErrorCode::contract, id() + ": no parameter named '" + name + "'");
  }
};

}  // namespace vlshot
