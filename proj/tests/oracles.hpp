#pragma once

// Test-only reference implementations. Nothing here calls into the library's
// computation paths; each oracle reaches its answer by a different route.

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>

namespace oracle {

/// Round a double to `mantissa_bits` fraction bits, nearest-even, by
/// operating on the IEEE-754 bit pattern directly. Normal inputs only.
inline double bitmask_round(double x, int mantissa_bits) {
  if (mantissa_bits >= 52 || x == 0.0) return x;
  const int shift = 52 - mantissa_bits;
  std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
  const std::uint64_t lsb = (bits >> shift) & 1u;
  const std::uint64_t half_minus_one = (std::uint64_t{1} << (shift - 1)) - 1;
  bits += half_minus_one + lsb;  // carries may ripple into the exponent, which is correct
  bits &= ~((std::uint64_t{1} << shift) - 1);
  return std::bit_cast<double>(bits);
}

/// FP32 rounding through the hardware conversion.
inline double hardware_fp32(double x) { return static_cast<double>(static_cast<float>(x)); }

/// First p in [0, limit] with fl(fl(p) + delta) == fl(p) under `round`.
inline std::optional<std::int64_t> brute_force_onset(double delta, std::int64_t limit,
                                                     const std::function<double(double)>& round) {
  for (std::int64_t p = 0; p <= limit; ++p) {
    const double at = round(static_cast<double>(p));
    if (at == 0.0) continue;
    if (round(at + delta) == at) return p;
  }
  return std::nullopt;
}

/// Bisection root of f on [lo, hi]; f(lo) and f(hi) must differ in sign.
inline double bisect(const std::function<double(double)>& f, double lo, double hi, int iterations = 200) {
  double flo = f(lo);
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fmid = f(mid);
    if ((fmid < 0) == (flo < 0)) {
      lo = mid;
      flo = fmid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// Frozen high-precision reference values (40 significant digits, mpmath).
namespace frozen {
inline constexpr double kTenThousandPowMinusHalf = 0.01;
inline constexpr double kTenThousandPowMinus126Over128 = 1.154781984689458179666482887295508281567e-4;
inline constexpr double kCos1 = 0.5403023058681397174009366074429766037323;
inline constexpr double kSin1 = 0.8414709848078965066525023216302989996226;
inline constexpr double kCos31416 = 0.9973027262742010780802746803016071931326;
inline constexpr double kSin31416 = 0.07339803925205331152028003053414728492851;
inline constexpr double kMaxContextBase1e4N32 = 566.0493241218053102221940848832671428672;
inline constexpr double kMaxContextBase1e4N1 = 3175.604292915213604942177729737454463575;
inline constexpr double kYarn3276p8N60 = 79257.82429884058484605116877025057221092;
inline constexpr double kFigure3Base = 94778.9684051401111188928245962632093557;
inline constexpr double kPow099To48 = 0.6172901409422881853361085277140654376668;
}  // namespace frozen

}  // namespace oracle
