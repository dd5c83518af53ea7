#pragma once

#include <subpix/rng.hpp>
#include <subpix/types.hpp>

#include <cmath>
#include <cstdint>

namespace subpix {

/// x/s split into integer cell and fractional remainder, base + frac == x/s.
template <typename Scalar>
struct Decomposition {
  std::int64_t base = 0;
  Scalar frac = Scalar(0);
};

/// Splits x/stride into floor and fractional part with frac in [0, 1).
/// Fractions within 1e-12 of 1 are snapped to the next cell so that values
/// sitting on a cell boundary up to division rounding quantize exactly.
template <typename Scalar>
Decomposition<Scalar> decompose(Scalar x, Scalar stride) {
  detail::require_finite(x, "coordinate");
  detail::require_stride(stride);
  const Scalar q = x / stride;
  Scalar base = std::floor(q);
  Scalar frac = q - base;
  if (Scalar(1) - frac <= Scalar(1e-12)) {
    base += Scalar(1);
    frac = Scalar(0);
  }
  return {static_cast<std::int64_t>(base), frac};
}

/// Unified threshold quantizer: floor when frac < t, next cell otherwise.
/// t=1 is floor, t=0.5 round-half-up, t=0 pushes every coordinate up.
template <typename Scalar>
std::int64_t quantize_threshold(Scalar x, Scalar stride, Scalar threshold) {
  detail::require_threshold(threshold);
  const auto d = decompose(x, stride);
  return d.frac < threshold ? d.base : d.base + 1;
}

/// Randomized rounding: rounds up with probability equal to the fractional
/// part. Consumes exactly one uniform draw per call, even when frac == 0.
template <typename Scalar>
std::int64_t quantize_random_round(Scalar x, Scalar stride, RngStream& rng) {
  const auto d = decompose(x, stride);
  const double t = rng.uniform();
  return static_cast<double>(d.frac) < t ? d.base : d.base + 1;
}

/// Expected per-axis decode bias of the threshold quantizer, in cells,
/// under uniformly distributed fractional parts.
template <typename Scalar>
constexpr Scalar threshold_bias(Scalar threshold) {
  return Scalar(0.5) - threshold;
}

}  // namespace subpix
