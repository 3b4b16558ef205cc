#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace lacp {

/// Per-column normalization record. A column whose standard deviation is zero
/// is only centered; `sd` is stored as 0 in that case.
struct ColumnStats {
  double mean = 0.0;
  double sd = 1.0;

  bool zero_variance() const noexcept { return sd == 0.0; }
  double apply(double v) const noexcept { return zero_variance() ? v - mean : (v - mean) / sd; }
  double revert(double v) const noexcept { return zero_variance() ? v + mean : v * sd + mean; }
};

/// d attribute columns followed by the label column (d + 1 entries).
using NormalizationStats = std::vector<ColumnStats>;

/// A labeled sample view into a Dataset.
struct Sample {
  std::span<const double> x;
  double y;
};

/// Row-major attribute matrix plus label vector. Rows are samples.
class Dataset {
 public:
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  Dataset() = default;
  Dataset(Matrix x, Eigen::VectorXd y, NormalizationStats stats = {});

  std::size_t size() const noexcept { return static_cast<std::size_t>(y_.size()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(x_.cols()); }
  bool empty() const noexcept { return size() == 0; }

  Sample sample(std::size_t i) const;
  std::span<const double> row(std::size_t i) const;

  const Matrix& x() const noexcept { return x_; }
  const Eigen::VectorXd& y() const noexcept { return y_; }
  const NormalizationStats& stats() const noexcept { return stats_; }
  bool normalized() const noexcept { return !stats_.empty(); }

  /// Rows selected by `indices`, in that order. Stats are carried over.
  Dataset subset(std::span<const std::size_t> indices) const;

 private:
  Matrix x_;
  Eigen::VectorXd y_;
  NormalizationStats stats_;
};

/// Parses a comma-separated file whose last column is the label. Lines
/// starting with '#' are comments. Throws IngestionError naming the row.
Dataset load_csv(const std::filesystem::path& path, bool has_header);

/// Same as load_csv but reads from an in-memory buffer.
Dataset parse_csv(const std::string& text, bool has_header);

/// Population-statistics standardization of every attribute and the label.
Dataset normalize(const Dataset& raw);

/// Applies previously computed stats to raw data.
Dataset apply_stats(const Dataset& raw, const NormalizationStats& stats);

/// Maps a normalized dataset back to raw units.
Dataset denormalize(const Dataset& normalized);

/// Normalizes a raw attribute vector with the attribute part of `stats`.
Eigen::VectorXd normalize_attributes(std::span<const double> raw_x, const NormalizationStats& stats);

struct SplitSpec {
  std::uint64_t seed = 0;
  /// proper_train, cp_train, validation, test.
  std::array<double, 4> fractions{0.4, 0.4, 0.1, 0.1};
};

struct SplitIndices {
  std::vector<std::size_t> proper_train;
  std::vector<std::size_t> cp_train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
};

struct Split {
  Dataset proper_train;
  Dataset cp_train;
  Dataset validation;
  Dataset test;
};

/// Deterministic shuffled partition of [0, n).
SplitIndices split_indices(std::size_t n, const SplitSpec& spec);

Split split(const Dataset& ds, const SplitSpec& spec);

}  // namespace lacp
