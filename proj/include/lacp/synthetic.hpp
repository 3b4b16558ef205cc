#pragma once

#include "lacp/dataset.hpp"

#include <array>
#include <cstdint>
#include <string_view>
#include <vector>

namespace lacp {

/// Heteroskedastic noise profiles on X in [-1, 1].
enum class NoiseKind { cos, squared, inverse, linear };

std::string_view to_string(NoiseKind kind);
/// Throws InvalidArgument for unknown names.
NoiseKind noise_from_string(std::string_view name);

/// Noise standard-deviation multiplier at X. Indicator boundaries are strict:
/// at |X| = 0.5 every indicator is off.
double amplitude(NoiseKind kind, double x, double rho = 0.1);

struct SynthSpec {
  NoiseKind kind = NoiseKind::cos;
  std::size_t n = 1000;
  double rho = 0.1;
  std::uint64_t seed = 0;
};

struct SyntheticData {
  /// Attributes are the normalized (1, X, X^2); labels are raw.
  Dataset data;
  /// Raw X per sample, in row order.
  std::vector<double> raw_x;
  /// Polynomial coefficients w0 + w1 X + w2 X^2 of the noiseless mean.
  std::array<double, 3> weights{};
  /// Mean and sd of the three raw attribute columns (constant column has sd 0).
  std::array<ColumnStats, 3> attribute_stats{};

  double mean_at(double x) const noexcept { return weights[0] + weights[1] * x + weights[2] * x * x; }
  /// Normalized attribute vector for a raw X.
  std::array<double, 3> attributes_at(double x) const noexcept;
};

SyntheticData generate(const SynthSpec& spec);

}  // namespace lacp
