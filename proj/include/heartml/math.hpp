#pragma once

#include <algorithm>
#include <cmath>

namespace heartml {

inline constexpr double kProbabilityClamp = 1e-12;

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

/// Binary cross-entropy on a clamped probability.
inline double bce(double p, int y) {
  const double q = clamp_probability(p);
  return y == 1 ? -std::log(q) : -std::log1p(-q);
}

}  // namespace heartml
