#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <vector>

#include "vlshot/clip/params.hpp"
#include "vlshot/core/error.hpp"
#include "vlshot/core/linalg.hpp"

namespace vlshot {

enum class Modality { image, text };

inline std::string_view to_string(Modality m) { return m == Modality::image ? "image" : "text"; }

/// Image reference of the all-black image used by the masked control.
inline constexpr std::string_view kBlackImage = "__black__";

inline constexpr double kInitTemperature = 0.07;
inline constexpr double kMaxLogitScale = 100.0;

/// Dual encoder handle: visual and text towers into a shared d-dim space,
/// a logit-scale multiplier, and a kind-tagged parameter enumeration.
class EncoderBundle {
 public:
  virtual ~EncoderBundle() = default;

  virtual std::string id() const = 0;
  virtual std::size_t embed_dim() const = 0;
  virtual std::vector<ParamInfo> parameters() const = 0;
  /// Hash of the current parameter state; changes whenever any value does.
  virtual std::uint64_t fingerprint() const = 0;
  virtual bool thread_safe() const { return false; }

  /// Unnormalized features, one per input, in order.
  std::vector<Vector> encode_raw(Modality m, std::span<const std::string> inputs) {
    calls_.fetch_add(1, std::memory_order_relaxed);
    std::unique_lock<std::mutex> lock(mutex_, std::defer_lock);
    if (!thread_safe()) lock.lock();
    auto out = m == Modality::text ? do_encode_text(inputs) : do_encode_image(inputs);
    require(out.size() == inputs.size(), ErrorCode::adapter,
            id() + ": encoder returned " + std::to_string(out.size()) + " vectors for " +
                std::to_string(inputs.size()) + " inputs");
    return out;
  }

  std::size_t encode_calls() const { return calls_.load(std::memory_order_relaxed); }

  double logit_scale() const { return logit_scale_; }
  double max_logit_scale() const { return max_logit_scale_; }

  /// Stores the multiplier, clamped to the maximum.
  void set_logit_scale(double s) {
    require(std::isfinite(s) && s > 0.0, ErrorCode::contract, "logit scale must be positive and finite");
    logit_scale_ = std::min(s, max_logit_scale_);
  }

  void set_max_logit_scale(double m) {
    require(std::isfinite(m) && m > 0.0, ErrorCode::configuration, "maximum logit scale must be positive");
    max_logit_scale_ = m;
    logit_scale_ = std::min(logit_scale_, m);
  }

  /// Marks exactly the named parameters trainable. Bundles without mutable
  /// weights only record the flags.
  virtual void set_trainable(const std::vector<std::string>& names) = 0;

 protected:
  virtual std::vector<Vector> do_encode_text(std::span<const std::string> texts) = 0;
  virtual std::vector<Vector> do_encode_image(std::span<const std::string> images) = 0;

 private:
  std::mutex mutex_;
  std::atomic<std::size_t> calls_{0};
  double logit_scale_ = 1.0 / kInitTemperature;
  double max_logit_scale_ = kMaxLogitScale;
};

}  // namespace vlshot
