#include "lacp/conformal.hpp"

#include "lacp/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace lacp {

ScoredSet make_scored_set(const Dataset& ds, Eigen::VectorXd predictions) {
  if (static_cast<std::size_t>(predictions.size()) != ds.size()) {
    throw InvalidArgument("scored set: one prediction per sample required");
  }
  ScoredSet s{ds.x(), ds.y(), std::move(predictions), Eigen::VectorXd(ds.y().size())};
  for (Eigen::Index i = 0; i < s.y.size(); ++i) s.score[i] = base_score(s.prediction[i], s.y[i]);
  return s;
}

std::size_t quantile_index(std::size_t n, double alpha) {
  if (n == 0) throw InvalidArgument("quantile_index: empty calibration set");
  const double np1 = static_cast<double>(n) + 1.0;
  if (!(alpha <= 1.0) || alpha * np1 < 1.0 - 1e-12) {
    std::ostringstream msg;
    msg << "alpha=" << alpha << " outside [1/(N+1), 1] for N=" << n
        << ": interval would require the (N+1)-th order statistic";
    throw InvalidArgument(msg.str());
  }
  const double m = std::ceil(np1 * (1.0 - alpha) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(m, 1.0)), 1, n);
}

std::vector<CalibrationRecord> calibration_records(const TransformFamily& family, const ScoredSet& calibration) {
  const Eigen::VectorXd g = family.localize_rows(calibration.x);
  std::vector<CalibrationRecord> out;
  out.reserve(calibration.size());
  for (std::size_t i = 0; i < calibration.size(); ++i) {
    const auto k = static_cast<Eigen::Index>(i);
    out.push_back({i, calibration.score[k], family.forward_at(calibration.score[k], g[k])});
  }
  return out;
}

double calibrate(std::span<const CalibrationRecord> records, double alpha) {
  if (records.empty()) throw InvalidArgument("calibrate: no calibration records");
  const std::size_t m = quantile_index(records.size(), alpha);
  std::vector<const CalibrationRecord*> order;
  order.reserve(records.size());
  for (const auto& r : records) order.push_back(&r);
  auto by_score = [](const CalibrationRecord* a, const CalibrationRecord* b) {
    return a->transformed < b->transformed || (a->transformed == b->transformed && a->index < b->index);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m - 1), order.end(), by_score);
  return order[m - 1]->transformed;
}

double calibrate(std::span<const double> transformed, double alpha) {
  std::vector<CalibrationRecord> records;
  records.reserve(transformed.size());
  for (std::size_t i = 0; i < transformed.size(); ++i) records.push_back({i, 0.0, transformed[i]});
  return calibrate(records, alpha);
}

PredictionInterval interval_at(const TransformFamily& family, double g_test, double prediction, double q_hat) {
  const double a = family.inverse_at(q_hat, g_test);
  if (!(a >= 0.0)) {
    std::ostringstream msg;
    msg << "inverse score " << a << " is negative; the interval has no label-space solution";
    throw CodomainError(msg.str());
  }
  return {prediction, std::sqrt(a)};
}

PredictionInterval interval(const TransformFamily& family, std::span<const double> x_test, double prediction,
                            double q_hat) {
  return interval_at(family, family.localize(x_test), prediction, q_hat);
}

std::vector<PredictionInterval> predict_intervals(const TransformFamily& family, const ScoredSet& calibration,
                                                  const Dataset::Matrix& x_test, const Eigen::VectorXd& predictions,
                                                  double alpha) {
  const auto records = calibration_records(family, calibration);
  const double q_hat = calibrate(records, alpha);
  const Eigen::VectorXd g = family.localize_rows(x_test);
  std::vector<PredictionInterval> out;
  out.reserve(static_cast<std::size_t>(x_test.rows()));
  for (Eigen::Index i = 0; i < x_test.rows(); ++i) out.push_back(interval_at(family, g[i], predictions[i], q_hat));
  return out;
}

std::vector<AlphaReport> evaluate(const TransformFamily& family, const ScoredSet& calibration, const ScoredSet& test,
                                  std::span<const double> alphas) {
  const auto records = calibration_records(family, calibration);
  const Eigen::VectorXd g_test = family.localize_rows(test.x);
  std::vector<AlphaReport> reports;
  for (double alpha : alphas) {
    AlphaReport r;
    r.alpha = alpha;
    r.calibration_size = calibration.size();
    r.test_size = test.size();
    try {
      const double q_hat = calibrate(records, alpha);
      double size_sum = 0.0;
      std::size_t covered = 0;
      for (std::size_t i = 0; i < test.size(); ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        const auto iv = interval_at(family, g_test[k], test.prediction[k], q_hat);
        size_sum += iv.size();
        covered += iv.contains(test.y[k]) ? 1 : 0;
      }
      r.mean_size = test.size() ? size_sum / static_cast<double>(test.size()) : 0.0;
      r.validity = test.size() ? static_cast<double>(covered) / static_cast<double>(test.size()) : 0.0;
    } catch (const Error& e) {
      r.error = e.what();
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace lacp
