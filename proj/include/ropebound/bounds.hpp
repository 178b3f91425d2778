#pragma once

// Closed-form bounds on the RoPE base.
//
//   aliasing:  base > L / (2 pi)                 (fundamental period covers L)
//   dc:        base >= L / arccos(eps)           (single-layer coherence)
//   depth:     base >= L / arccos(eps^(1/N))     (coherence compounded over N layers)
//   combined:  max(aliasing, depth)
//   precision: base < 1 / eps_mach
//
// All bounds are returned as reals; rounding happens only when rendering.

#include <algorithm>
#include <cmath>
#include <cstdint>

#include "ropebound/common.hpp"
#include "ropebound/precision.hpp"

namespace ropebound {

struct StabilityParams {
  std::int64_t context_length = 0;
  double coherence_threshold = kDefaultEpsilon;
  int num_layers = 1;

  void validate() const {
    detail::require(context_length >= 1, "context_length must be >= 1");
    detail::require_unit_interval(coherence_threshold, "coherence_threshold");
    detail::require(num_layers >= 1, "num_layers must be >= 1");
  }
};

struct FeasibilityRegion {
  double lower = 0.0;
  double upper = 0.0;
  bool non_empty = false;

  [[nodiscard]] bool contains(double base) const noexcept { return non_empty && lower <= base && base < upper; }
  [[nodiscard]] double midpoint() const noexcept { return 0.5 * (lower + upper); }
};

namespace detail {

/// arccos(1 - t) for t in [0, 2], accurate as t -> 0.
inline double acos_one_minus(double t) {
  if (t < 1e-8) return std::sqrt(2.0 * t) * (1.0 + t / 12.0);
  return std::acos(1.0 - t);
}

/// arccos(eps^(1/N)) without forming 1 - eps^(1/N) by subtraction.
inline double per_layer_angle(double eps, int num_layers) {
  const double t = -std::expm1(std::log(eps) / static_cast<double>(num_layers));
  return acos_one_minus(t);
}

inline void require_length(double length) {
  require(std::isfinite(length) && length > 0.0, "context length must be positive and finite");
}

}  // namespace detail

inline double aliasing_lower_bound(std::int64_t context_length) {
  detail::require(context_length >= 1, "context_length must be >= 1");
  return static_cast<double>(context_length) / kTwoPi;
}

inline double coherence_multiplier(double eps) {
  detail::require(eps >= 0.0 && eps < 1.0, "epsilon must lie in [0, 1)");
  return 1.0 / std::acos(eps);
}

inline double dc_lower_bound(std::int64_t context_length, double eps) {
  detail::require(context_length >= 1, "context_length must be >= 1");
  detail::require_unit_interval(eps);
  return static_cast<double>(context_length) / std::acos(eps);
}

inline double depth_lower_bound(const StabilityParams& params) {
  params.validate();
  return static_cast<double>(params.context_length) /
         detail::per_layer_angle(params.coherence_threshold, params.num_layers);
}

/// Depth bound with the context replaced by an effective length f(L),
/// e.g. the compressed extent under a position-remapping scheme such as YaRN.
inline double yarn_adjusted_bound(double effective_length, double eps, int num_layers) {
  detail::require_length(effective_length);
  detail::require_unit_interval(eps);
  detail::require(num_layers >= 1, "num_layers must be >= 1");
  return std::max(effective_length / kTwoPi, effective_length / detail::per_layer_angle(eps, num_layers));
}

inline double combined_lower_bound(const StabilityParams& params) {
  params.validate();
  return std::max(aliasing_lower_bound(params.context_length), depth_lower_bound(params));
}

inline double precision_upper_bound(const FloatFormat& format) { return 1.0 / format.machine_epsilon(); }

inline FeasibilityRegion feasibility_region(const StabilityParams& params, const FloatFormat& format) {
  FeasibilityRegion region;
  region.lower = combined_lower_bound(params);
  region.upper = precision_upper_bound(format);
  region.non_empty = region.lower < region.upper;
  return region;
}

/// Largest context length both lower bounds admit at this base.
inline double max_context_for_base(double base, double eps, int num_layers) {
  detail::require(std::isfinite(base) && base > 1.0, "base must be greater than 1");
  detail::require_unit_interval(eps);
  detail::require(num_layers >= 1, "num_layers must be >= 1");
  return base * std::min(kTwoPi, detail::per_layer_angle(eps, num_layers));
}

}  // namespace ropebound
