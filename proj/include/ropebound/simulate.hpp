#pragma once

// Sampled curves for the aliasing, DC-stability, depth-decay and precision
// erasure scans, plus CSV/JSON export.
//
// CSV layout:
//   # key=value          (one line per metadata entry, sorted by key)
//   position,value
//   0,1
//   ...

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ropebound/common.hpp"
#include "ropebound/oscillator.hpp"
#include "ropebound/precision.hpp"

namespace ropebound {

struct Sample {
  Position position = 0;
  double value = 0.0;

  friend bool operator==(const Sample&, const Sample&) = default;
};

struct Curve {
  std::string label;
  std::vector<Sample> samples;
  std::map<std::string, std::string> metadata;

  /// Positions strictly increasing, values finite.
  [[nodiscard]] bool well_formed() const {
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!std::isfinite(samples[i].value)) return false;
      if (i > 0 && samples[i].position <= samples[i - 1].position) return false;
    }
    return true;
  }
};

enum class CurveFormat { CSV, JSON };

inline constexpr std::int64_t kMaxCurveSamples = 1'000'000;

/// Stride 1 unless that would exceed kMaxCurveSamples samples.
inline std::int64_t default_stride(std::int64_t max_position) {
  const std::int64_t count = max_position + 1;
  return count <= kMaxCurveSamples ? 1 : (count + kMaxCurveSamples - 1) / kMaxCurveSamples;
}

namespace detail {

inline void require_base(double base) {
  require(std::isfinite(base) && base > 1.0, "base must be greater than 1");
}

template <typename Fn>
Curve sample_positions(std::string label, std::int64_t max_position, std::int64_t stride, Fn&& fn) {
  require(max_position >= 0, "max_position must be non-negative");
  require(stride >= 1, "stride must be positive");
  Curve curve;
  curve.label = std::move(label);
  curve.samples.reserve(static_cast<std::size_t>(max_position / stride + 1));
  for (std::int64_t p = 0; p <= max_position; p += stride) curve.samples.push_back({p, fn(p)});
  return curve;
}

}  // namespace detail

/// cos(delta / base) for delta = 0, stride, 2*stride, ...
inline Curve aliasing_scan(double base, std::int64_t max_position, std::int64_t stride) {
  detail::require_base(base);
  Curve curve = detail::sample_positions("aliasing", max_position, stride,
                                         [base](Position p) { return fundamental_similarity(p, base); });
  curve.metadata["base"] = format_double(base);
  curve.metadata["stride"] = std::to_string(stride);
  curve.metadata["analytic_spike"] = format_double(kTwoPi * base);
  return curve;
}

struct AliasingFeatures {
  Sample minimum;
  Sample spike;  // first local maximum after the first trough
};

/// Walks down to the first trough, then up to the next local maximum.
/// Empty if the curve never turns back up inside the sampled range.
inline std::optional<AliasingFeatures> find_aliasing_spike(const Curve& curve) {
  const auto& s = curve.samples;
  std::size_t i = 0;
  while (i + 1 < s.size() && s[i + 1].value <= s[i].value) ++i;
  const std::size_t trough = i;
  while (i + 1 < s.size() && s[i + 1].value >= s[i].value) ++i;
  if (i == trough) return std::nullopt;
  return AliasingFeatures{s[trough], s[i]};
}

inline std::vector<Curve> dc_stability_scan(std::span<const double> bases, std::int64_t max_position,
                                            std::int64_t stride) {
  std::vector<Curve> curves;
  curves.reserve(bases.size());
  for (double base : bases) {
    detail::require_base(base);
    Curve curve = detail::sample_positions("dc_stability", max_position, stride,
                                           [base](Position p) { return fundamental_similarity(p, base); });
    curve.metadata["base"] = format_double(base);
    curve.metadata["stride"] = std::to_string(stride);
    curve.metadata["rotations_at_max"] = format_double(static_cast<double>(max_position) / base / kTwoPi);
    curves.push_back(std::move(curve));
  }
  return curves;
}

inline std::vector<Curve> dc_stability_scan(std::span<const double> bases, std::int64_t max_position) {
  return dc_stability_scan(bases, max_position, default_stride(max_position));
}

/// cos(p/base)^N per layer count, as plain real exponentiation of the signed cosine.
inline std::vector<Curve> depth_decay_scan(double base, std::span<const int> layer_counts, std::int64_t max_position,
                                           std::int64_t stride) {
  detail::require_base(base);
  std::vector<Curve> curves;
  curves.reserve(layer_counts.size());
  for (int layers : layer_counts) {
    detail::require(layers >= 1, "layer counts must be positive");
    Curve curve = detail::sample_positions("depth_decay", max_position, stride, [base, layers](Position p) {
      return std::pow(fundamental_similarity(p, base), layers);
    });
    curve.metadata["base"] = format_double(base);
    curve.metadata["layers"] = std::to_string(layers);
    curve.metadata["stride"] = std::to_string(stride);
    curves.push_back(std::move(curve));
  }
  return curves;
}

inline std::vector<Curve> depth_decay_scan(double base, std::span<const int> layer_counts,
                                           std::int64_t max_position) {
  return depth_decay_scan(base, layer_counts, max_position, default_stride(max_position));
}

/// Indicator per position: 1 if the step by 1/base survives rounding, 0 if erased.
inline Curve precision_erasure_scan(double base, const FloatFormat& format, std::int64_t max_position) {
  const DeadZoneReport zones = dead_zone_map(base, format, max_position);
  Curve curve;
  curve.label = "precision_erasure";
  curve.samples.reserve(static_cast<std::size_t>(zones.scanned_to + 1));
  auto run = zones.runs.begin();
  for (Position p = 0; p <= zones.scanned_to; ++p) {
    while (run != zones.runs.end() && run->end < p) ++run;
    const bool erased = run != zones.runs.end() && run->start <= p;
    curve.samples.push_back({p, erased ? 0.0 : 1.0});
  }
  curve.metadata["base"] = format_double(base);
  curve.metadata["format"] = std::string(to_string(format.name));
  curve.metadata["onset"] = zones.onset ? std::to_string(*zones.onset) : "none";
  curve.metadata["scanned_to"] = std::to_string(zones.scanned_to);
  return curve;
}

inline nlohmann::ordered_json curve_json(const Curve& curve) {
  nlohmann::ordered_json j;
  j["label"] = curve.label;
  auto samples = nlohmann::ordered_json::array();
  for (const auto& s : curve.samples) samples.push_back({{"position", s.position}, {"value", s.value}});
  j["samples"] = std::move(samples);
  j["metadata"] = curve.metadata;
  return j;
}

inline void export_curve(const Curve& curve, std::ostream& out, CurveFormat format) {
  if (format == CurveFormat::JSON) {
    out << curve_json(curve).dump(2) << '\n';
    return;
  }
  out << "# label=" << curve.label << '\n';
  for (const auto& [key, value] : curve.metadata) out << "# " << key << '=' << value << '\n';
  out << "position,value\n";
  for (const auto& s : curve.samples) out << s.position << ',' << format_double(s.value) << '\n';
}

inline void export_curve(const Curve& curve, const std::string& path, CurveFormat format) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot open '" + path + "' for writing");
  export_curve(curve, file, format);
  file.flush();
  if (!file) throw std::runtime_error("write failed for '" + path + "'");
}

/// Reads one curve in the CSV layout written by export_curve.
inline Curve parse_curve_csv(std::istream& in) {
  Curve curve;
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (!header_seen && line.rfind("# ", 0) == 0) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw InvalidArgument("malformed metadata line: " + line);
      std::string key = line.substr(2, eq - 2);
      std::string value = line.substr(eq + 1);
      if (key == "label") {
        curve.label = std::move(value);
      } else {
        curve.metadata[std::move(key)] = std::move(value);
      }
      continue;
    }
    if (!header_seen) {
      if (line != "position,value") throw InvalidArgument("expected header 'position,value', got: " + line);
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw InvalidArgument("malformed sample line: " + line);
    curve.samples.push_back({parse_int(std::string_view(line).substr(0, comma)),
                             parse_double(std::string_view(line).substr(comma + 1))});
  }
  if (!header_seen) throw InvalidArgument("missing 'position,value' header");
  return curve;
}

}  // namespace ropebound
