#pragma once

#include <span>

#include "vlshot/core/error.hpp"
#include "vlshot/core/linalg.hpp"

namespace vlshot {

/// [v1, v2, v1 + v2, v1 - v2, v1 * v2], each block of length d.
inline Vector fuse(std::span<const double> v1, std::span<const double> v2) {
  require(v1.size() == v2.size(), ErrorCode::contract,
          "fuse: dimension mismatch (" + std::to_string(v1.size()) + " vs " + std::to_string(v2.size()) + ")");
  const auto d = v1.size();
  Vector out(5 * d);
  for (std::size_t i = 0; i < d; ++i) {
    out[i] = v1[i];
    out[d + i] = v2[i];
    out[2 * d + i] = v1[i] + v2[i];
    out[3 * d + i] = v1[i] - v2[i];
    out[4 * d + i] = v1[i] * v2[i];
  }
  return out;
}

}  // namespace vlshot
