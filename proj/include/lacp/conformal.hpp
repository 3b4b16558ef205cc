#pragma once

#include "lacp/dataset.hpp"
#include "lacp/transforms.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace lacp {

/// Squared residual (f(x) - y)^2.
inline double base_score(double prediction, double label) {
  const double r = prediction - label;
  return r * r;
}

/// A dataset paired with point predictions and base scores.
struct ScoredSet {
  Dataset::Matrix x;
  Eigen::VectorXd y;
  Eigen::VectorXd prediction;
  Eigen::VectorXd score;

  std::size_t size() const noexcept { return static_cast<std::size_t>(y.size()); }
  std::span<const double> row(std::size_t i) const {
    return {x.data() + i * static_cast<std::size_t>(x.cols()), static_cast<std::size_t>(x.cols())};
  }
};

ScoredSet make_scored_set(const Dataset& ds, Eigen::VectorXd predictions);

/// m* = ceil((N + 1)(1 - alpha)), valid for alpha in [1/(N+1), 1].
std::size_t quantile_index(std::size_t n, double alpha);

struct CalibrationRecord {
  std::size_t index;
  double score;
  double transformed;
};

/// Transformed scores B_n = phi_{x_n}(A_n) for every calibration sample.
std::vector<CalibrationRecord> calibration_records(const TransformFamily& family, const ScoredSet& calibration);

/// The m*-th smallest transformed score. Ties are ordered by record index.
double calibrate(std::span<const CalibrationRecord> records, double alpha);
/// Same, from bare transformed scores.
double calibrate(std::span<const double> transformed, double alpha);

struct PredictionInterval {
  double center;
  double half_width;

  double lower() const noexcept { return center - half_width; }
  double upper() const noexcept { return center + half_width; }
  double size() const noexcept { return 2.0 * half_width; }
  bool contains(double y) const noexcept { return y >= lower() && y <= upper(); }
};

/// [f(x) - D, f(x) + D] with D = sqrt(phi_x^{-1}(q_hat)).
PredictionInterval interval(const TransformFamily& family, std::span<const double> x_test, double prediction,
                            double q_hat);
PredictionInterval interval_at(const TransformFamily& family, double g_test, double prediction, double q_hat);

struct AlphaReport {
  double alpha = 0.0;
  double mean_size = 0.0;
  double validity = 0.0;
  std::size_t calibration_size = 0;
  std::size_t test_size = 0;
  /// Set when the alpha is not admissible for the calibration size (or the
  /// inverse failed); the numeric fields are then meaningless.
  std::optional<std::string> error;

  bool ok() const noexcept { return !error.has_value(); }
};

/// Calibrates on `calibration` and reports, per alpha, the mean interval size
/// and the fraction of test labels covered.
std::vector<AlphaReport> evaluate(const TransformFamily& family, const ScoredSet& calibration, const ScoredSet& test,
                                  std::span<const double> alphas);

/// Per-sample intervals for the test set at one alpha.
std::vector<PredictionInterval> predict_intervals(const TransformFamily& family, const ScoredSet& calibration,
                                                  const Dataset::Matrix& x_test, const Eigen::VectorXd& predictions,
                                                  double alpha);

}  // namespace lacp
