#pragma once

#include <cstddef>
#include <mutex>
#include <numeric>
#include <string>
#include <vector>

namespace vlshot {

struct GenerationOptions {
  std::size_t num_beams = 20;
  std::size_t num_return = 10;
  std::size_t max_span_tokens = 30;
};

struct GeneratedSpan {
  std::string text;
  std::vector<double> token_log_probs;

  double total_log_prob() const { return std::accumulate(token_log_probs.begin(), token_log_probs.end(), 0.0); }

  /// Mean per-token log-probability; the template confidence measure.
  double mean_log_prob() const {
    return token_log_probs.empty() ? 0.0 : total_log_prob() / static_cast<double>(token_log_probs.size());
  }
};

/// Sentinel-span infilling language model (T5-style). Public calls are
/// serialized per handle unless the implementation declares itself
/// thread-safe.
class InfillLm {
 public:
  virtual ~InfillLm() = default;

  virtual std::string sentinel() const { return "<extra_id_0>"; }
  virtual bool thread_safe() const { return false; }
  virtual std::string name() const = 0;

  /// Token count of a candidate span under the model's tokenizer.
  virtual std::size_t count_tokens(const std::string& span) const = 0;

  std::vector<GeneratedSpan> generate(const std::string& context, const GenerationOptions& opts) {
    if (thread_safe()) return do_generate(context, opts);
    std::lock_guard lock(mutex_);
    return do_generate(context, opts);
  }

  /// log P(span fills the sentinel | context), summed over span tokens, for
  /// every candidate in order.
  std::vector<double> score_spans(const std::string& context, const std::vector<std::string>& spans) {
    if (thread_safe()) return do_score_spans(context, spans);
    std::lock_guard lock(mutex_);
    return do_score_spans(context, spans);
  }

 protected:
  virtual std::vector<GeneratedSpan> do_generate(const std::string& context, const GenerationOptions& opts) = 0;
  virtual std::vector<double> do_score_spans(const std::string& context, const std::vector<std::string>& spans) = 0;

 private:
  std::mutex mutex_;
};

}  // namespace vlshot
