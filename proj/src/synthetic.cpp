#include "lacp/synthetic.hpp"

#include "lacp/error.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace lacp {

std::string_view to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::cos:
      return "cos";
    case NoiseKind::squared:
      return "squared";
    case NoiseKind::inverse:
      return "inverse";
    case NoiseKind::linear:
      return "linear";
  }
  return "unknown";
}

NoiseKind noise_from_string(std::string_view name) {
  for (auto k : {NoiseKind::cos, NoiseKind::squared, NoiseKind::inverse, NoiseKind::linear})
    if (to_string(k) == name) return k;
  throw InvalidArgument("unknown noise kind '" + std::string(name) + "'");
}

double amplitude(NoiseKind kind, double x, double rho) {
  const double ax = std::abs(x);
  switch (kind) {
    case NoiseKind::cos:
      return rho + (ax < 0.5 ? 2.0 * std::cos(std::numbers::pi / 2.0 * ax) : 0.0);
    case NoiseKind::squared:
      return rho + (ax > 0.5 ? 2.0 * x * x : 0.0);
    case NoiseKind::inverse:
      return rho + (ax > 0.5 ? 2.0 / (rho + ax) : 0.0);
    case NoiseKind::linear:
      return rho + (ax < 0.5 ? 2.0 - ax : 0.0);
  }
  return rho;
}

std::array<double, 3> SyntheticData::attributes_at(double x) const noexcept {
  const double raw[3] = {1.0, x, x * x};
  std::array<double, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) out[c] = attribute_stats[c].apply(raw[c]);
  return out;
}

SyntheticData generate(const SynthSpec& spec) {
  if (spec.n < 1) throw InvalidArgument("synth: n must be positive");
  if (!(spec.rho > 0.0)) throw InvalidArgument("synth: rho must be positive");

  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  SyntheticData out;
  for (auto& w : out.weights) w = normal(rng);

  const auto n = static_cast<Eigen::Index>(spec.n);
  Dataset::Matrix raw(n, 3);
  Eigen::VectorXd y(n);
  out.raw_x.resize(spec.n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = uniform(rng);
    const double xi = normal(rng);
    out.raw_x[static_cast<std::size_t>(i)] = x;
    raw.row(i) << 1.0, x, x * x;
    y[i] = out.mean_at(x) + amplitude(spec.kind, x, spec.rho) * xi;
  }

  if (spec.n >= 2) {
    const auto scaled = normalize(Dataset(raw, y));
    for (std::size_t c = 0; c < 3; ++c) out.attribute_stats[c] = scaled.stats()[c];
  } else {
    out.attribute_stats = {ColumnStats{1.0, 0.0}, ColumnStats{raw(0, 1), 0.0}, ColumnStats{raw(0, 2), 0.0}};
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index c = 0; c < 3; ++c) raw(i, c) = out.attribute_stats[static_cast<std::size_t>(c)].apply(raw(i, c));
  out.data = Dataset(std::move(raw), std::move(y));
  return out;
}

}  // namespace lacp
