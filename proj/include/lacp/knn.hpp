#pragma once

#include "lacp/dataset.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace lacp {

/// Uniform-weight k-nearest-neighbour regressor with Euclidean distance.
/// Distance ties go to the lower stored index.
class KnnModel {
 public:
  KnnModel(Dataset train, std::size_t k);

  double predict(std::span<const double> x) const;
  Eigen::VectorXd predict(const Dataset& ds) const;

  std::size_t k() const noexcept { return k_; }
  const Dataset& train() const noexcept { return train_; }

 private:
  Dataset train_;
  std::size_t k_;
};

struct KnnFitOptions {
  std::vector<std::size_t> k_grid{1, 2, 3, 5, 8, 13, 21, 34, 50};
  std::size_t folds = 5;
  std::uint64_t seed = 0;
  /// Drop grid entries that are too large for the training folds instead of failing.
  bool clip_grid = false;
};

/// Selects k by `folds`-fold cross-validated mean squared error. Ties favour
/// the smaller k.
KnnModel fit_knn(const Dataset& proper_train, const KnnFitOptions& options);

/// Cross-validated MSE for each grid entry (same order as the grid).
std::vector<double> knn_cv_errors(const Dataset& proper_train, const KnnFitOptions& options);

}  // namespace lacp
