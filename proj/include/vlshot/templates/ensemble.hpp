#pragma once

#include <optional>

#include "vlshot/core/error.hpp"
#include "vlshot/templates/types.hpp"

namespace vlshot {

/// Prefer the generated template unless its confidence falls below the
/// threshold; the parsed template is the fallback.
inline MaskedTemplate ensemble_template(const std::optional<MaskedTemplate>& demo,
                                        const std::optional<MaskedTemplate>& parsing, double threshold) {
  if (!demo && !parsing) fail(ErrorCode::no_template, "neither template path produced a template");
  if (demo && demo->confidence && *demo->confidence >= threshold) return *demo;
  if (parsing) return *parsing;
  return *demo;
}

}  // namespace vlshot
