#include "lacp/knn.hpp"

#include "lacp/error.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace lacp {

namespace {

struct Neighbour {
  double dist2;
  std::size_t index;
  bool operator<(const Neighbour& o) const noexcept {
    return dist2 < o.dist2 || (dist2 == o.dist2 && index < o.index);
  }
};

double knn_mean(const Dataset& train, std::span<const std::size_t> rows, std::span<const double> x, std::size_t k,
                std::vector<Neighbour>& scratch) {
  scratch.clear();
  const auto d = train.dim();
  for (std::size_t r : rows) {
    const auto xr = train.row(r);
    double s = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      const double diff = xr[c] - x[c];
      s += diff * diff;
    }
    scratch.push_back({s, r});
  }
  std::partial_sort(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(k), scratch.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < k; ++i) sum += train.y()[static_cast<Eigen::Index>(scratch[i].index)];
  return sum / static_cast<double>(k);
}

}  // namespace

KnnModel::KnnModel(Dataset train, std::size_t k) : train_(std::move(train)), k_(k) {
  if (k_ < 1 || k_ > train_.size()) throw InvalidArgument("knn: k must lie in [1, number of stored samples]");
}

double KnnModel::predict(std::span<const double> x) const {
  if (x.size() != train_.dim()) throw InvalidArgument("knn: attribute dimension mismatch");
  std::vector<std::size_t> rows(train_.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<Neighbour> scratch;
  scratch.reserve(rows.size());
  return knn_mean(train_, rows, x, k_, scratch);
}

Eigen::VectorXd KnnModel::predict(const Dataset& ds) const {
  if (ds.dim() != train_.dim()) throw InvalidArgument("knn: attribute dimension mismatch");
  std::vector<std::size_t> rows(train_.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::vector<Neighbour> scratch;
  scratch.reserve(rows.size());
  Eigen::VectorXd out(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) out[static_cast<Eigen::Index>(i)] = knn_mean(train_, rows, ds.row(i), k_, scratch);
  return out;
}

namespace {

std::vector<std::size_t> checked_grid(const Dataset& train, const KnnFitOptions& options) {
  if (options.folds < 2) throw InvalidArgument("knn: need at least two folds");
  if (train.size() < options.folds) throw InvalidArgument("knn: fewer samples than folds");
  // Smallest training-fold size bounds every admissible k.
  const std::size_t max_k = train.size() - (train.size() + options.folds - 1) / options.folds;
  std::vector<std::size_t> grid;
  for (std::size_t k : options.k_grid) {
    if (k == 0) throw InvalidArgument("knn: k must be positive");
    if (k > max_k) {
      if (options.clip_grid) continue;
      throw InvalidArgument("knn: grid value k=" + std::to_string(k) + " exceeds the training-fold size");
    }
    grid.push_back(k);
  }
  if (grid.empty()) throw InvalidArgument("knn: empty k grid");
  return grid;
}

}  // namespace

std::vector<double> knn_cv_errors(const Dataset& train, const KnnFitOptions& options) {
  const auto grid = checked_grid(train, options);
  const std::size_t n = train.size();

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(options.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % options.folds;

  const std::size_t k_max = *std::max_element(grid.begin(), grid.end());
  std::vector<double> sse(grid.size(), 0.0);
  std::vector<Neighbour> scratch;
  for (std::size_t fold = 0; fold < options.folds; ++fold) {
    std::vector<std::size_t> fit_rows;
    for (std::size_t i = 0; i < n; ++i)
      if (fold_of[i] != fold) fit_rows.push_back(i);
    for (std::size_t i = 0; i < n; ++i) {
      if (fold_of[i] != fold) continue;
      // One sorted neighbour list serves every k in the grid.
      knn_mean(train, fit_rows, train.row(i), k_max, scratch);
      std::vector<double> prefix(k_max + 1, 0.0);
      for (std::size_t j = 0; j < k_max; ++j)
        prefix[j + 1] = prefix[j] + train.y()[static_cast<Eigen::Index>(scratch[j].index)];
      const double yi = train.y()[static_cast<Eigen::Index>(i)];
      for (std::size_t g = 0; g < grid.size(); ++g) {
        const double pred = prefix[grid[g]] / static_cast<double>(grid[g]);
        sse[g] += (pred - yi) * (pred - yi);
      }
    }
  }
  for (auto& e : sse) e /= static_cast<double>(n);
  return sse;
}

KnnModel fit_knn(const Dataset& proper_train, const KnnFitOptions& options) {
  auto grid = checked_grid(proper_train, options);
  if (grid.size() == 1) return KnnModel(proper_train, grid.front());
  const auto errors = knn_cv_errors(proper_train, options);
  std::size_t best = 0;
  for (std::size_t g = 1; g < grid.size(); ++g) {
    if (errors[g] < errors[best] || (errors[g] == errors[best] && grid[g] < grid[best])) best = g;
  }
  return KnnModel(proper_train, grid[best]);
}

}  // namespace lacp
