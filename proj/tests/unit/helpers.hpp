#pragma once

#include "lacp/conformal.hpp"
#include "lacp/localizer.hpp"
#include "lacp/transforms.hpp"

#include <cmath>
#include <random>
#include <vector>

namespace lacp::testing {

// One-layer net g(x) = w * x + b for scalar x.
inline LocalizerNet affine_net(double w, double b = 0.0) {
  Eigen::VectorXd p(2);
  p << w, b;
  return LocalizerNet({1, 1}, p);
}

// sqrt(A) + theta * x: the three-point worked example.
inline TransformFamily shifted_root(double theta) {
  return TransformFamily(FamilyKind::shifted_root, affine_net(theta));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)}); }

inline ScoredSet random_scored_set(std::size_t n, std::size_t d, std::mt19937_64& rng, double score_scale = 1.0) {
  std::normal_distribution<double> normal;
  ScoredSet s;
  s.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  s.y.resize(static_cast<Eigen::Index>(n));
  s.prediction = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  s.score.resize(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < s.x.rows(); ++i) {
    for (Eigen::Index j = 0; j < s.x.cols(); ++j) s.x(i, j) = normal(rng);
    s.y[i] = score_scale * normal(rng) * (1.0 + std::abs(s.x(i, 0)));
    s.score[i] = base_score(s.prediction[i], s.y[i]);
  }
  return s;
}

// Rows whose hidden pre-activations all stay at least `margin` away from the
// ReLU kink, so central differences do not straddle one.
inline ScoredSet off_kink_set(const LocalizerNet& net, std::size_t n, std::mt19937_64& rng, double margin = 1e-3) {
  const std::size_t d = net.input_dim();
  ScoredSet out;
  out.x.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  out.y.resize(static_cast<Eigen::Index>(n));
  out.prediction = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  out.score.resize(static_cast<Eigen::Index>(n));
  for (std::size_t filled = 0; filled < n;) {
    const auto candidate = random_scored_set(1, d, rng);
    if (net.forward(candidate.row(0)).tape.min_abs_hidden_preactivation() < margin) continue;
    const auto i = static_cast<Eigen::Index>(filled++);
    out.x.row(i) = candidate.x.row(0);
    out.y[i] = candidate.y[0];
    out.score[i] = candidate.score[0];
  }
  return out;
}

inline const std::vector<FamilyKind>& trainable_kinds() {
  static const std::vector<FamilyKind> kinds{FamilyKind::erc, FamilyKind::linear, FamilyKind::exp, FamilyKind::sigma};
  return kinds;
}

}  // namespace lacp::testing
