#pragma once

// Software emulation of reduced binary floating-point formats and detection of
// positional "dead zones": positions p where fl(fl(p) + dtheta) == fl(p), so
// the phase accumulator cannot advance by one token's worth of the
// fundamental frequency.
//
// Only mantissa rounding is modeled. Subnormal inputs and results above the
// largest finite value are rejected.

#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ropebound/common.hpp"

namespace ropebound {

enum class FormatName { BF16, FP16, FP32, FP64 };

struct FloatFormat {
  FormatName name;
  int mantissa_bits;  // explicit fraction bits
  int min_exponent;   // smallest normal exponent
  int max_exponent;

  /// 2^-mantissa_bits, exact.
  [[nodiscard]] double machine_epsilon() const noexcept { return std::ldexp(1.0, -mantissa_bits); }
  [[nodiscard]] double min_normal() const noexcept { return std::ldexp(1.0, min_exponent); }
  [[nodiscard]] double max_finite() const noexcept {
    return std::ldexp(2.0 - std::ldexp(1.0, -mantissa_bits), max_exponent);
  }

  friend bool operator==(const FloatFormat&, const FloatFormat&) = default;
};

inline constexpr FloatFormat kBF16{FormatName::BF16, 7, -126, 127};
inline constexpr FloatFormat kFP16{FormatName::FP16, 10, -14, 15};
inline constexpr FloatFormat kFP32{FormatName::FP32, 23, -126, 127};
inline constexpr FloatFormat kFP64{FormatName::FP64, 52, -1022, 1023};

inline std::string_view to_string(FormatName name) {
  switch (name) {
    case FormatName::BF16: return "BF16";
    case FormatName::FP16: return "FP16";
    case FormatName::FP32: return "FP32";
    case FormatName::FP64: return "FP64";
  }
  return "?";
}

inline FloatFormat format_from_name(std::string_view name) {
  if (name == "BF16") return kBF16;
  if (name == "FP16") return kFP16;
  if (name == "FP32") return kFP32;
  if (name == "FP64") return kFP64;
  throw InvalidArgument("unknown precision '" + std::string(name) + "' (expected BF16, FP16, FP32 or FP64)");
}

/// Round-to-nearest, ties-to-even onto the format's significand grid.
/// Identity for FP64. Zero passes through unchanged.
inline double round_to_format(double x, const FloatFormat& format) {
  detail::require_finite(x, "value");
  if (format.name == FormatName::FP64 || x == 0.0) return x;

  const int exponent = std::ilogb(x);
  if (exponent < format.min_exponent) {
    throw OutOfRange("value " + format_double(x) + " is subnormal in " + std::string(to_string(format.name)));
  }
  // Scaling by powers of two is exact, so the only rounding is nearbyint
  // (default rounding mode: nearest, ties to even).
  const double scaled = std::ldexp(x, format.mantissa_bits - exponent);
  const double rounded = std::ldexp(std::nearbyint(scaled), exponent - format.mantissa_bits);
  if (std::fabs(rounded) > format.max_finite()) {
    throw OutOfRange("value " + format_double(x) + " overflows " + std::string(to_string(format.name)));
  }
  return rounded;
}

/// Whether one accumulator step of `delta_theta` from position p survives rounding.
inline bool phase_step_distinguishable(double position, double delta_theta, const FloatFormat& format) {
  detail::require(delta_theta > 0.0 && std::isfinite(delta_theta), "delta_theta must be positive and finite");
  detail::require(position >= 0.0, "position must be non-negative");
  const double at = round_to_format(position, format);
  // Any positive increment from zero moves the ruler.
  if (at == 0.0) return true;
  return round_to_format(at + delta_theta, format) != at;
}

namespace detail {

/// Largest integer position the scan can visit in `format`.
inline std::int64_t scan_ceiling(std::int64_t scan_limit, const FloatFormat& format) {
  const double cap = std::floor(format.max_finite());
  if (cap < static_cast<double>(scan_limit)) return static_cast<std::int64_t>(cap);
  return scan_limit;
}

}  // namespace detail

/// First integer position p <= scan_limit whose step by 1/base is erased.
inline std::optional<std::int64_t> erasure_onset(double base, const FloatFormat& format, std::int64_t scan_limit) {
  detail::require_finite(base, "base");
  detail::require(base > 1.0, "base must be greater than 1");
  detail::require(scan_limit >= 0, "scan_limit must be non-negative");
  const double delta = 1.0 / base;
  const std::int64_t last = detail::scan_ceiling(scan_limit, format);
  for (std::int64_t p = 0; p <= last; ++p) {
    if (!phase_step_distinguishable(static_cast<double>(p), delta, format)) return p;
  }
  return std::nullopt;
}

struct PositionRun {
  std::int64_t start = 0;
  std::int64_t end = 0;  // inclusive

  friend bool operator==(const PositionRun&, const PositionRun&) = default;
};

struct DeadZoneReport {
  double base = 0.0;
  FloatFormat format = kFP32;
  std::optional<std::int64_t> onset;
  std::vector<PositionRun> runs;
  std::int64_t scanned_to = 0;
};

/// Maximal runs of erased positions over [0, scan_limit] (capped at the
/// format's largest finite integer).
inline DeadZoneReport dead_zone_map(double base, const FloatFormat& format, std::int64_t scan_limit) {
  detail::require_finite(base, "base");
  detail::require(base > 1.0, "base must be greater than 1");
  detail::require(scan_limit >= 0, "scan_limit must be non-negative");

  DeadZoneReport report;
  report.base = base;
  report.format = format;
  report.scanned_to = detail::scan_ceiling(scan_limit, format);

  const double delta = 1.0 / base;
  std::int64_t open = -1;
  for (std::int64_t p = 0; p <= report.scanned_to; ++p) {
    const bool erased = !phase_step_distinguishable(static_cast<double>(p), delta, format);
    if (erased && open < 0) {
      open = p;
    } else if (!erased && open >= 0) {
      report.runs.push_back({open, p - 1});
      open = -1;
    }
  }
  if (open >= 0) report.runs.push_back({open, report.scanned_to});
  if (!report.runs.empty()) report.onset = report.runs.front().start;
  return report;
}

inline void write_dead_zone_csv(const DeadZoneReport& report, std::ostream& out) {
  out << "run_start,run_end\n";
  for (const auto& run : report.runs) out << run.start << ',' << run.end << '\n';
}

inline nlohmann::ordered_json dead_zone_json(const DeadZoneReport& report) {
  nlohmann::ordered_json j;
  j["base"] = report.base;
  j["format"] = std::string(to_string(report.format.name));
  j["onset"] = report.onset ? nlohmann::ordered_json(*report.onset) : nlohmann::ordered_json(nullptr);
  auto runs = nlohmann::ordered_json::array();
  for (const auto& run : report.runs) runs.push_back({{"run_start", run.start}, {"run_end", run.end}});
  j["runs"] = std::move(runs);
  j["scanned_to"] = report.scanned_to;
  return j;
}

}  // namespace ropebound
