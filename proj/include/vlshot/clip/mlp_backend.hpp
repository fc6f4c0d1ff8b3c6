#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vlshot/clip/differentiable.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/hash.hpp"
#include "vlshot/core/random.hpp"
#include "vlshot/core/text.hpp"

namespace vlshot {

struct MlpEncoderConfig {
  std::string id = "mlp-mock";
  std::size_t input_dim = 64;
  std::size_t hidden_dim = 32;
  std::size_t embed_dim = 16;
  std::uint64_t seed = 0;
  /// Image refs of the form "text:<words>" are featurized like text, which
  /// lets synthetic datasets describe their images.
  bool image_text_alias = true;
};

/// Deterministic dual encoder for desk-scale runs and tests.
///
/// Inputs become feature vectors (explicit tables, else seeded hashing), then
/// pass through one shared tower:
///   proj_in (Linear) -> norm (LayerNorm) -> tanh -> proj_out (Linear).
/// The all-black image is the zero feature vector.
class MlpDualEncoder : public DifferentiableBundle {
 public:
  static constexpr double kLayerNormEps = 1e-5;

  explicit MlpDualEncoder(MlpEncoderConfig cfg = {}) : cfg_(std::move(cfg)) {
    require(cfg_.input_dim > 0 && cfg_.hidden_dim > 1 && cfg_.embed_dim > 0, ErrorCode::configuration,
            "mlp encoder: dimensions must be positive (hidden >= 2)");
    const auto in = cfg_.input_dim, hid = cfg_.hidden_dim, out = cfg_.embed_dim;
    auto rng = make_rng(cfg_.seed, 0x31a7);
    auto gauss = [&](std::size_t n, double sd) {
      Vector v(n);
      for (auto& x : v) x = sd * standard_normal(rng);
      return v;
    };
    tensors_.push_back({{"proj_in.weight", {hid, in}, ParamKind::weight, true}, gauss(hid * in, 1.0 / std::sqrt(double(in)))});
    tensors_.push_back({{"proj_in.bias", {hid}, ParamKind::bias, true}, gauss(hid, 0.1)});
    tensors_.push_back({{"norm.weight", {hid}, ParamKind::norm_gain, true}, Vector(hid, 1.0)});
    tensors_.push_back({{"norm.bias", {hid}, ParamKind::norm_shift, true}, Vector(hid, 0.0)});
    tensors_.push_back({{"proj_out.weight", {out, hid}, ParamKind::weight, true}, gauss(out * hid, 1.0 / std::sqrt(double(hid)))});
    tensors_.push_back({{"proj_out.bias", {out}, ParamKind::bias, true}, gauss(out, 0.1)});
  }

  const MlpEncoderConfig& config() const { return cfg_; }

  void set_text_features(const std::string& text, Vector x) { put(text_features_, text, std::move(x)); }
  void set_image_features(const std::string& ref, Vector x) { put(image_features_, ref, std::move(x)); }

  std::string id() const override { return cfg_.id; }
  std::size_t embed_dim() const override { return cfg_.embed_dim; }
  std::vector<Tensor>& tensors() override { return tensors_; }
  const std::vector<Tensor>& tensors() const override { return tensors_; }

  Vector features(Modality m, const std::string& input) const {
    const auto& table = m == Modality::text ? text_features_ : image_features_;
    if (auto it = table.find(input); it != table.end()) return it->second;
    if (m == Modality::text) return text_features(input);
    if (input == kBlackImage) return Vector(cfg_.input_dim, 0.0);
    if (cfg_.image_text_alias && text::starts_with(input, "text:")) return text_features(input.substr(5));
    Vector x(cfg_.input_dim);
    auto rng = make_rng(cfg_.seed ^ hash_text(input), 0x1ab6);
    for (auto& v : x) v = standard_normal(rng);
    return x;
  }

  std::size_t forward(Modality m, const std::string& input, Vector& raw) override {
    Activation a;
    raw = run(features(m, input), &a);
    tape_.push_back(std::move(a));
    return tape_.size() - 1;
  }

  void backward(std::size_t slot, std::span<const double> d_out, std::vector<Vector>& grads) const override {
    require(slot < tape_.size(), ErrorCode::contract, "mlp encoder: unknown tape slot");
    require(grads.size() == tensors_.size(), ErrorCode::contract, "mlp encoder: gradient layout mismatch");
    const auto& a = tape_[slot];
    const auto in = cfg_.input_dim, hid = cfg_.hidden_dim, out = cfg_.embed_dim;
    const auto& w2 = tensors_[4].data;
    const auto& gain = tensors_[2].data;
    Vector dt(hid, 0.0);
    for (std::size_t o = 0; o < out; ++o) {
      grads[5][o] += d_out[o];
      for (std::size_t j = 0; j < hid; ++j) {
        grads[4][o * hid + j] += d_out[o] * a.t[j];
        dt[j] += w2[o * hid + j] * d_out[o];
      }
    }
    Vector dz(hid);
    double mean_dz = 0.0, mean_dz_z = 0.0;
    for (std::size_t j = 0; j < hid; ++j) {
      const double dy = dt[j] * (1.0 - a.t[j] * a.t[j]);
      grads[2][j] += dy * a.z[j];
      grads[3][j] += dy;
      dz[j] = dy * gain[j];
      mean_dz += dz[j];
      mean_dz_z += dz[j] * a.z[j];
    }
    mean_dz /= double(hid);
    mean_dz_z /= double(hid);
    for (std::size_t j = 0; j < hid; ++j) {
      const double dh = a.rstd * (dz[j] - mean_dz - a.z[j] * mean_dz_z);
      grads[1][j] += dh;
      for (std::size_t i = 0; i < in; ++i) grads[0][j * in + i] += dh * a.x[i];
    }
  }

  void clear_tape() override { tape_.clear(); }

 protected:
  std::vector<Vector> do_encode_text(std::span<const std::string> texts) override { return batch(Modality::text, texts); }
  std::vector<Vector> do_encode_image(std::span<const std::string> refs) override { return batch(Modality::image, refs); }

 private:
  struct Activation {
    Vector x, z, t;
    double rstd = 0.0;
  };

  void put(std::map<std::string, Vector>& table, const std::string& key, Vector x) {
    require(x.size() == cfg_.input_dim, ErrorCode::contract,
            cfg_.id + ": feature vector for '" + key + "' has dimension " + std::to_string(x.size()));
    table[key] = std::move(x);
  }

  /// Signed feature hashing of unigrams and adjacent bigrams.
  Vector text_features(const std::string& s) const {
    std::string cleaned;
    for (char c : text::lower(s)) cleaned.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : ' ');
    const auto words = text::split_ws(cleaned);
    Vector x(cfg_.input_dim, 0.0);
    auto add = [&](const std::string& key, double w) {
      const auto h = mix64(hash_text(key) ^ cfg_.seed);
      x[h % cfg_.input_dim] += (h >> 63) ? -w : w;
    };
    for (std::size_t i = 0; i < words.size(); ++i) {
      add(words[i], 1.0);
      if (i + 1 < words.size()) add(words[i] + ' ' + words[i + 1], 0.5);
    }
    return x;
  }

  Vector run(const Vector& x, Activation* keep) const {
    const auto in = cfg_.input_dim, hid = cfg_.hidden_dim, out = cfg_.embed_dim;
    const auto& w1 = tensors_[0].data;
    const auto& b1 = tensors_[1].data;
    const auto& gain = tensors_[2].data;
    const auto& shift = tensors_[3].data;
    const auto& w2 = tensors_[4].data;
    const auto& b2 = tensors_[5].data;
    Vector h(hid);
    for (std::size_t j = 0; j < hid; ++j) {
      double s = b1[j];
      for (std::size_t i = 0; i < in; ++i) s += w1[j * in + i] * x[i];
      h[j] = s;
    }
    double mu = 0.0;
    for (double v : h) mu += v;
    mu /= double(hid);
    double var = 0.0;
    for (double v : h) var += (v - mu) * (v - mu);
    var /= double(hid);
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    Vector z(hid), t(hid);
    for (std::size_t j = 0; j < hid; ++j) {
      z[j] = (h[j] - mu) * rstd;
      t[j] = std::tanh(gain[j] * z[j] + shift[j]);
    }
    Vector o(out);
    for (std::size_t k = 0; k < out; ++k) {
      double s = b2[k];
      for (std::size_t j = 0; j < hid; ++j) s += w2[k * hid + j] * t[j];
      o[k] = s;
    }
    if (keep) *keep = Activation{x, std::move(z), std::move(t), rstd};
    return o;
  }

  std::vector<Vector> batch(Modality m, std::span<const std::string> inputs) const {
    std::vector<Vector> out;
    out.reserve(inputs.size());
    for (const auto& s : inputs) out.push_back(run(features(m, s), nullptr));
    return out;
  }

  MlpEncoderConfig cfg_;
  std::vector<Tensor> tensors_;
  std::map<std::string, Vector> text_features_, image_features_;
  std::vector<Activation> tape_;
};

}  // namespace vlshot
