#include "lacp/dataset.hpp"

#include "lacp/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace lacp {

Dataset::Dataset(Matrix x, Eigen::VectorXd y, NormalizationStats stats)
    : x_(std::move(x)), y_(std::move(y)), stats_(std::move(stats)) {
  if (x_.rows() != y_.size()) {
    throw InvalidArgument("dataset: attribute rows and label count differ");
  }
  if (!stats_.empty() && stats_.size() != dim() + 1) {
    throw InvalidArgument("dataset: normalization stats must have d+1 entries");
  }
}

std::span<const double> Dataset::row(std::size_t i) const {
  return {x_.data() + i * dim(), dim()};
}

Sample Dataset::sample(std::size_t i) const { return {row(i), y_[static_cast<Eigen::Index>(i)]}; }

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Matrix x(static_cast<Eigen::Index>(indices.size()), x_.cols());
  Eigen::VectorXd y(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    const auto src = static_cast<Eigen::Index>(indices[r]);
    x.row(static_cast<Eigen::Index>(r)) = x_.row(src);
    y[static_cast<Eigen::Index>(r)] = y_[src];
  }
  return Dataset(std::move(x), std::move(y), stats_);
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_cell(std::string_view cell, std::size_t line) {
  cell = trim(cell);
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size()) {
    throw IngestionError("row " + std::to_string(line) + ": non-numeric cell '" + std::string(cell) + "'",
                         line);
  }
  if (!std::isfinite(value)) {
    throw IngestionError("row " + std::to_string(line) + ": non-finite value", line);
  }
  return value;
}

}  // namespace

Dataset parse_csv(const std::string& text, bool has_header) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_pending = has_header;
  std::size_t columns = 0;
  std::vector<double> cells;
  std::size_t rows = 0;

  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty() || view.front() == '#') continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    std::size_t count = 0;
    std::size_t start = 0;
    while (true) {
      const auto comma = view.find(',', start);
      const auto cell = view.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start);
      cells.push_back(parse_cell(cell, line_no));
      ++count;
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (count < 2) {
      throw IngestionError("row " + std::to_string(line_no) + ": need at least two columns", line_no);
    }
    if (columns == 0) {
      columns = count;
    } else if (count != columns) {
      throw IngestionError("row " + std::to_string(line_no) + ": expected " + std::to_string(columns) +
                               " columns, got " + std::to_string(count),
                           line_no);
    }
    ++rows;
  }
  if (rows == 0) throw IngestionError("no rows", 0);

  const auto d = static_cast<Eigen::Index>(columns - 1);
  Dataset::Matrix x(static_cast<Eigen::Index>(rows), d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(rows));
  for (std::size_t r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < d; ++c) x(static_cast<Eigen::Index>(r), c) = cells[r * columns + c];
    y[static_cast<Eigen::Index>(r)] = cells[r * columns + columns - 1];
  }
  return Dataset(std::move(x), std::move(y));
}

Dataset load_csv(const std::filesystem::path& path, bool has_header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open " + path.string(), 0);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str(), has_header);
}

namespace {

ColumnStats column_stats(const auto& column) {
  const auto n = static_cast<double>(column.size());
  const double mean = column.sum() / n;
  const double var = (column.array() - mean).square().sum() / n;
  double sd = std::sqrt(var);
  if (sd <= 1e-12 * std::max(1.0, std::abs(mean))) sd = 0.0;
  return {mean, sd};
}

}  // namespace

Dataset normalize(const Dataset& raw) {
  if (raw.size() < 2) throw InvalidArgument("normalize: need at least two samples");
  NormalizationStats stats;
  stats.reserve(raw.dim() + 1);
  for (Eigen::Index c = 0; c < raw.x().cols(); ++c) stats.push_back(column_stats(raw.x().col(c)));
  stats.push_back(column_stats(raw.y()));
  return apply_stats(raw, stats);
}

Dataset apply_stats(const Dataset& raw, const NormalizationStats& stats) {
  if (stats.size() != raw.dim() + 1) throw InvalidArgument("apply_stats: stats must have d+1 entries");
  Dataset::Matrix x = raw.x();
  Eigen::VectorXd y = raw.y();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto& s = stats[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = s.apply(x(r, c));
  }
  for (auto& v : y) v = stats.back().apply(v);
  return Dataset(std::move(x), std::move(y), stats);
}

Dataset denormalize(const Dataset& normalized) {
  const auto& stats = normalized.stats();
  if (stats.empty()) return normalized;
  Dataset::Matrix x = normalized.x();
  Eigen::VectorXd y = normalized.y();
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto& s = stats[static_cast<std::size_t>(c)];
    for (Eigen::Index r = 0; r < x.rows(); ++r) x(r, c) = s.revert(x(r, c));
  }
  for (auto& v : y) v = stats.back().revert(v);
  return Dataset(std::move(x), std::move(y));
}

Eigen::VectorXd normalize_attributes(std::span<const double> raw_x, const NormalizationStats& stats) {
  if (stats.size() != raw_x.size() + 1) throw InvalidArgument("normalize_attributes: dimension mismatch");
  Eigen::VectorXd out(static_cast<Eigen::Index>(raw_x.size()));
  for (std::size_t c = 0; c < raw_x.size(); ++c) out[static_cast<Eigen::Index>(c)] = stats[c].apply(raw_x[c]);
  return out;
}

SplitIndices split_indices(std::size_t n, const SplitSpec& spec) {
  double total = 0.0;
  for (double f : spec.fractions) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("split: fractions must lie in [0, 1]");
    total += f;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("split: fractions must sum to 1");

  std::array<std::size_t, 4> sizes{};
  std::size_t assigned = 0;
  for (std::size_t p = 0; p < 3; ++p) {
    sizes[p] = static_cast<std::size_t>(std::floor(spec.fractions[p] * static_cast<double>(n) + 1e-9));
    assigned += sizes[p];
  }
  if (assigned > n) throw InvalidArgument("split: fractions exceed dataset size");
  sizes[3] = n - assigned;
  for (std::size_t s : sizes) {
    if (s == 0) throw InvalidArgument("split: a fraction yields an empty part");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitIndices out;
  auto cursor = order.begin();
  for (auto [part, size] : {std::pair{&out.proper_train, sizes[0]}, std::pair{&out.cp_train, sizes[1]},
                            std::pair{&out.validation, sizes[2]}, std::pair{&out.test, sizes[3]}}) {
    part->assign(cursor, cursor + static_cast<std::ptrdiff_t>(size));
    cursor += static_cast<std::ptrdiff_t>(size);
  }
  return out;
}

Split split(const Dataset& ds, const SplitSpec& spec) {
  const auto idx = split_indices(ds.size(), spec);
  return {ds.subset(idx.proper_train), ds.subset(idx.cp_train), ds.subset(idx.validation), ds.subset(idx.test)};
}

}  // namespace lacp
