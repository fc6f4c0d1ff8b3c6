#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "vlshot/binor/optimizer.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/linalg.hpp"
#include "vlshot/core/random.hpp"

namespace vlshot {

/// Feed-forward ReLU classifier: input -> hidden... -> classes, with
/// inverted dropout after each hidden activation during training.
class MlpClassifier {
 public:
  struct Layer {
    std::size_t in = 0, out = 0;
    Vector w;  // out x in, row-major
    Vector b;
  };

  MlpClassifier() = default;

  MlpClassifier(std::size_t input_dim, const std::vector<std::size_t>& hidden, std::size_t classes, double dropout,
                std::uint64_t seed)
      : dropout_(dropout) {
    require(input_dim > 0 && classes > 1, ErrorCode::configuration, "classifier: bad dimensions");
    require(dropout >= 0.0 && dropout < 1.0, ErrorCode::configuration, "classifier: dropout must lie in [0, 1)");
    auto rng = make_rng(seed, 0xc1a5);
    std::size_t prev = input_dim;
    std::vector<std::size_t> dims = hidden;
    dims.push_back(classes);
    for (auto d : dims) {
      require(d > 0, ErrorCode::configuration, "classifier: zero-width layer");
      Layer l{prev, d, Vector(prev * d), Vector(d, 0.0)};
      const double bound = std::sqrt(6.0 / double(prev));  // He uniform
      for (auto& x : l.w) x = (2.0 * uniform01(rng) - 1.0) * bound;
      layers_.push_back(std::move(l));
      prev = d;
    }
  }

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t classes() const { return layers_.empty() ? 0 : layers_.back().out; }
  double dropout() const { return dropout_; }
  const std::vector<Layer>& layers() const { return layers_; }

  Vector logits(std::span<const double> x) const { return run(x, nullptr, nullptr); }

  std::size_t predict(std::span<const double> x) const {
    const auto l = logits(x);
    std::size_t best = 0;
    for (std::size_t i = 1; i < l.size(); ++i)
      if (l[i] > l[best]) best = i;
    return best;
  }

  /// Mean cross-entropy over the batch; accumulates gradients (same layout
  /// as the layer list: w then b per layer).
  double loss_and_grads(const std::vector<const Vector*>& xs, std::span<const std::size_t> ys,
                        std::vector<Vector>& grads, Rng* dropout_rng) const {
    grads.clear();
    for (const auto& l : layers_) {
      grads.emplace_back(l.w.size(), 0.0);
      grads.emplace_back(l.b.size(), 0.0);
    }
    const double inv = 1.0 / double(xs.size());
    double total = 0.0;
    for (std::size_t n = 0; n < xs.size(); ++n) {
      std::vector<Vector> acts;  // acts[i] is the input to layer i
      std::vector<Vector> masks;
      const auto out = run(*xs[n], &acts, dropout_rng ? &masks : nullptr, dropout_rng);
      double mx = -std::numeric_limits<double>::infinity();
      for (double v : out) mx = std::max(mx, v);
      double z = 0.0;
      for (double v : out) z += std::exp(v - mx);
      const double lse = mx + std::log(z);
      total += lse - out[ys[n]];
      Vector delta(out.size());
      for (std::size_t k = 0; k < out.size(); ++k) delta[k] = (std::exp(out[k] - lse) - (k == ys[n] ? 1.0 : 0.0)) * inv;
      for (std::size_t li = layers_.size(); li-- > 0;) {
        const auto& l = layers_[li];
        const auto& a = acts[li];
        auto& gw = grads[2 * li];
        auto& gb = grads[2 * li + 1];
        Vector back(l.in, 0.0);
        for (std::size_t o = 0; o < l.out; ++o) {
          gb[o] += delta[o];
          for (std::size_t i = 0; i < l.in; ++i) {
            gw[o * l.in + i] += delta[o] * a[i];
            back[i] += l.w[o * l.in + i] * delta[o];
          }
        }
        if (li == 0) break;
        // a = mask * relu(pre); derivative flows where a > 0
        for (std::size_t i = 0; i < l.in; ++i) {
          double g = a[i] > 0.0 ? back[i] : 0.0;
          if (!masks.empty() && g != 0.0) g *= masks[li - 1][i];
          back[i] = g;
        }
        delta = std::move(back);
      }
    }
    return total * inv;
  }

  std::vector<Vector*> parameter_slots() {
    std::vector<Vector*> s;
    for (auto& l : layers_) {
      s.push_back(&l.w);
      s.push_back(&l.b);
    }
    return s;
  }

  nlohmann::json to_json() const {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& l : layers_) layers.push_back({{"in", l.in}, {"out", l.out}, {"w", l.w}, {"b", l.b}});
    return {{"dropout", dropout_}, {"layers", layers}};
  }

  static MlpClassifier from_json(const nlohmann::json& j) {
    MlpClassifier c;
    c.dropout_ = j.at("dropout").get<double>();
    for (const auto& l : j.at("layers")) {
      Layer layer{l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>(), l.at("w").get<Vector>(),
                  l.at("b").get<Vector>()};
      require(layer.w.size() == layer.in * layer.out && layer.b.size() == layer.out, ErrorCode::load,
              "classifier checkpoint: layer shape mismatch");
      c.layers_.push_back(std::move(layer));
    }
    return c;
  }

 private:
  Vector run(std::span<const double> x, std::vector<Vector>* acts, std::vector<Vector>* masks,
             Rng* rng = nullptr) const {
    require(x.size() == input_dim(), ErrorCode::contract,
            "classifier: input dimension " + std::to_string(x.size()) + ", expected " + std::to_string(input_dim()));
    Vector cur(x.begin(), x.end());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const auto& l = layers_[li];
      if (acts) acts->push_back(cur);
      Vector next(l.out);
      for (std::size_t o = 0; o < l.out; ++o) {
        double s = l.b[o];
        const double* row = &l.w[o * l.in];
        for (std::size_t i = 0; i < l.in; ++i) s += row[i] * cur[i];
        next[o] = s;
      }
      if (li + 1 < layers_.size()) {
        Vector mask;
        if (masks && rng && dropout_ > 0.0) mask.resize(l.out);
        for (std::size_t o = 0; o < l.out; ++o) {
          next[o] = std::max(0.0, next[o]);
          if (!mask.empty()) {
            mask[o] = uniform01(*rng) < dropout_ ? 0.0 : 1.0 / (1.0 - dropout_);
            next[o] *= mask[o];
          }
        }
        if (masks) masks->push_back(mask.empty() ? Vector(l.out, 1.0) : std::move(mask));
      }
      cur = std::move(next);
    }
    return cur;
  }

  double dropout_ = 0.0;
  std::vector<Layer> layers_;
};

}  // namespace vlshot
