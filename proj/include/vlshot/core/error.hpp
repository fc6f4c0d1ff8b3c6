#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vlshot {

enum class ErrorCode {
  invalid_input,
  contract,
  load,
  generation_failure,
  unsupported_question,
  conversion,
  no_template,
  yesno_generation,
  assembly,
  tagging,
  non_finite_loss,
  configuration,
  adapter,
  io,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_input: return "invalid_input";
    case ErrorCode::contract: return "contract";
    case ErrorCode::load: return "load";
    case ErrorCode::generation_failure: return "generation_failure";
    case ErrorCode::unsupported_question: return "unsupported_question";
    case ErrorCode::conversion: return "conversion";
    case ErrorCode::no_template: return "no_template";
    case ErrorCode::yesno_generation: return "yesno_generation";
    case ErrorCode::assembly: return "assembly";
    case ErrorCode::tagging: return "tagging";
    case ErrorCode::non_finite_loss: return "non_finite_loss";
    case ErrorCode::configuration: return "configuration";
    case ErrorCode::adapter: return "adapter";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code so the
/// runner can degrade per-question errors and report structured summaries.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) throw Error(code, what);
}

}  // namespace vlshot
