#pragma once

#include "lacp/conformal.hpp"
#include "lacp/transforms.hpp"

#include <span>

namespace lacp {

/// Loss value and its gradient w.r.t. the localizer parameters. The gradient
/// is empty for families without a localizer.
struct LossValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// A minibatch of (attribute row, base score) pairs.
struct LossBatch {
  Dataset::Matrix x;
  Eigen::VectorXd score;

  std::size_t size() const noexcept { return static_cast<std::size_t>(score.size()); }
  static LossBatch from(const ScoredSet& set, std::span<const std::size_t> rows);
  static LossBatch from(const ScoredSet& set);
};

/// sqrt(phi_{x_test}^{-1}(phi_{x_cal}(A))): the half-width at x_test obtained
/// when the calibration sample (x_cal, A) is the quantile.
double loss_pair_term(const TransformFamily& family, std::span<const double> x_test, std::span<const double> x_cal,
                      double score);
double loss_pair_term_at(const TransformFamily& family, double g_test, double g_cal, double score);

/// Averaged interval size over all ordered (test, calibration) pairs of the
/// batch, normalized by m(m-1), with its total derivative in the parameters.
LossValue loss_batch(const TransformFamily& family, const LossBatch& batch, bool with_gradient = true);

/// Mean squared error between g(x) and the base score (error-fit baseline).
LossValue erc_error_fit_loss(const LocalizerNet& net, const LossBatch& batch, bool with_gradient = true);

/// Mean interval size 2D at a single alpha (evaluation metric, never trained on).
double single_alpha_size(const TransformFamily& family, const ScoredSet& calibration, const ScoredSet& test,
                         double alpha);

}  // namespace lacp
