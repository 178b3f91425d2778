#pragma once

// Rotary position embedding as a bank of complex oscillators.
//
// Channel k (1-based) of a d-dimensional head rotates its feature pair by
// p * theta_k with theta_k = base^(-2(k-1)/d). Storage is highest frequency
// first, so frequencies()[0] == 1 and frequencies().back() ~ 1/base.

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ropebound/common.hpp"

namespace ropebound {

using Position = std::int64_t;

/// Angular increments theta_k in radians/token, highest frequency first.
inline std::vector<double> channel_frequencies(double base, int head_dim) {
  detail::require_finite(base, "base");
  detail::require(base > 1.0, "base must be greater than 1");
  detail::require(head_dim >= 2 && head_dim % 2 == 0, "head_dim must be a positive even integer");

  const int channels = head_dim / 2;
  std::vector<double> freqs(static_cast<std::size_t>(channels));
  for (int k = 0; k < channels; ++k) {
    freqs[static_cast<std::size_t>(k)] =
        std::pow(base, -2.0 * static_cast<double>(k) / static_cast<double>(head_dim));
  }
  return freqs;
}

class OscillatorBank {
 public:
  OscillatorBank(double base, int head_dim)
      : base_(base), head_dim_(head_dim), frequencies_(channel_frequencies(base, head_dim)) {}

  /// Bank with explicit frequencies (test constructions such as rational-period banks).
  /// Frequencies must be positive, finite and strictly decreasing.
  static OscillatorBank from_frequencies(std::vector<double> frequencies) {
    detail::require(!frequencies.empty(), "frequency list must not be empty");
    for (std::size_t k = 0; k < frequencies.size(); ++k) {
      detail::require(std::isfinite(frequencies[k]) && frequencies[k] > 0.0,
                      "frequencies must be positive and finite");
      if (k > 0) {
        detail::require(frequencies[k] < frequencies[k - 1], "frequencies must be strictly decreasing");
      }
    }
    OscillatorBank bank;
    bank.head_dim_ = static_cast<int>(2 * frequencies.size());
    bank.frequencies_ = std::move(frequencies);
    return bank;
  }

  /// Nominal base; 0 for banks built from explicit frequencies.
  [[nodiscard]] double base() const noexcept { return base_; }
  [[nodiscard]] int head_dim() const noexcept { return head_dim_; }
  [[nodiscard]] std::size_t channels() const noexcept { return frequencies_.size(); }
  [[nodiscard]] std::span<const double> frequencies() const noexcept { return frequencies_; }
  [[nodiscard]] double lowest_frequency() const noexcept { return frequencies_.back(); }

 private:
  OscillatorBank() = default;

  double base_ = 0.0;
  int head_dim_ = 0;
  std::vector<double> frequencies_;
};

/// Planar rotation of (x, y) by `angle` radians.
inline std::array<double, 2> rotate_pair(std::array<double, 2> pair, double angle) {
  detail::require_finite(pair[0], "pair component");
  detail::require_finite(pair[1], "pair component");
  detail::require_finite(angle, "angle");
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * pair[0] - s * pair[1], s * pair[0] + c * pair[1]};
}

/// Rotates feature pair k of `vector` by position * theta_k.
inline std::vector<double> rope_transform(std::span<const double> vector, Position position,
                                          const OscillatorBank& bank) {
  if (vector.size() != static_cast<std::size_t>(bank.head_dim())) {
    throw InvalidArgument("rope_transform: vector length " + std::to_string(vector.size()) +
                          " does not match head_dim " + std::to_string(bank.head_dim()));
  }
  detail::require(position >= 0, "position must be non-negative");
  std::vector<double> out(vector.size());
  const auto freqs = bank.frequencies();
  const double p = static_cast<double>(position);
  for (std::size_t k = 0; k < freqs.size(); ++k) {
    const auto r = rotate_pair({vector[2 * k], vector[2 * k + 1]}, p * freqs[k]);
    out[2 * k] = r[0];
    out[2 * k + 1] = r[1];
  }
  return out;
}

struct PhasorVector {
  Position position = 0;
  std::vector<std::complex<double>> phasors;
};

/// e^{i * position * theta_k} for every channel.
inline PhasorVector phasor_vector(Position position, const OscillatorBank& bank) {
  detail::require(position >= 0, "position must be non-negative");
  PhasorVector v{position, {}};
  v.phasors.reserve(bank.channels());
  const double p = static_cast<double>(position);
  for (double theta : bank.frequencies()) {
    v.phasors.push_back(std::polar(1.0, p * theta));
  }
  return v;
}

/// Unit-amplitude positional kernel: mean over channels of cos(delta * theta_k).
inline double relative_kernel(std::int64_t delta, const OscillatorBank& bank) {
  const double d = static_cast<double>(delta);
  double sum = 0.0;
  for (double theta : bank.frequencies()) sum += std::cos(d * theta);
  return sum / static_cast<double>(bank.channels());
}

/// Similarity of the fundamental (lowest-frequency) channel, theta_min = 1/base.
inline double fundamental_similarity(std::int64_t delta, double base) {
  detail::require_finite(base, "base");
  detail::require(base > 1.0, "base must be greater than 1");
  return std::cos(static_cast<double>(delta) / base);
}

}  // namespace ropebound
