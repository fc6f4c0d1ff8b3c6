#pragma once

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "vlshot/core/error.hpp"

namespace vlshot {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  require(a.size() == b.size(), ErrorCode::contract,
          "dot: dimension mismatch " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

/// Unit-L2 copy. A zero vector has no direction and is returned unchanged.
inline Vector normalized(std::span<const double> a) {
  const double n = l2_norm(a);
  Vector out(a.begin(), a.end());
  if (n > 0.0) {
    for (auto& x : out) x /= n;
  }
  return out;
}

/// Row-major dense matrix used by the small trainable heads.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  Vector data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
};

}  // namespace vlshot
