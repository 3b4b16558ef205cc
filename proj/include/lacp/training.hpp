#pragma once

#include "lacp/conformal.hpp"
#include "lacp/dataset.hpp"
#include "lacp/knn.hpp"
#include "lacp/objective.hpp"
#include "lacp/transforms.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lacp {

/// A family as named on the command line: fixed, erc, erc-fit, linear, exp, sigma.
struct FamilyChoice {
  FamilyKind kind = FamilyKind::fixed;
  /// Localizer fit to the squared residuals instead of the size objective.
  bool error_fit = false;

  std::string label() const;
  static FamilyChoice parse(std::string_view name);
  bool operator==(const FamilyChoice&) const = default;
};

struct TrainConfig {
  FamilyChoice family{FamilyKind::linear, false};
  std::size_t epochs = 200;
  std::size_t batch_size = 16;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  /// Epochs without validation improvement before stopping.
  std::size_t patience = 20;
  FamilyOptions options{};
};

struct EpochRecord {
  std::size_t epoch;
  double train_loss;
  double val_loss;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;
  /// Validation objective of the initial parameters (epoch 0).
  double initial_val_loss = 0.0;
  /// 0 means the initial parameters were kept.
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
};

struct TrainResult {
  TransformFamily family;
  TrainTrace trace;
};

/// Thrown when a loss or gradient turns non-finite; carries the trace so far.
class TrainingDiverged : public NumericalError {
 public:
  TrainingDiverged(const std::string& what, TrainTrace trace) : NumericalError(what), trace_(std::move(trace)) {}
  const TrainTrace& trace() const noexcept { return trace_; }

 private:
  TrainTrace trace_;
};

/// Validation objective: averaged size over all ordered pairs of the set.
double validation_loss(const TransformFamily& family, const ScoredSet& validation);

/// Minimizes the averaged interval size with Adam over shuffled minibatches
/// and returns the parameters of the best validation epoch.
TrainResult train(const TrainConfig& config, const ScoredSet& cp_train, const ScoredSet& validation);

/// Error-fit baseline: the erc localizer regresses the squared residual; early
/// stopping still uses the validation size objective.
TrainResult train_erc_error_fit(const TrainConfig& config, const ScoredSet& cp_train, const ScoredSet& validation);

/// Dispatches on config.family: fixed returns the parameter-free family.
TrainResult train_family(const TrainConfig& config, const ScoredSet& cp_train, const ScoredSet& validation);

struct ProtocolConfig {
  std::string dataset_name = "data";
  std::vector<FamilyChoice> families;
  std::vector<double> alphas{0.05, 0.1, 0.32};
  std::size_t runs = 5;
  std::uint64_t seed0 = 0;
  SplitSpec split{};
  KnnFitOptions knn{};
  TrainConfig train{};
};

struct ProtocolRow {
  std::string dataset;
  std::string family;
  double alpha = 0.0;
  std::uint64_t run_seed = 0;
  double mean_size = 0.0;
  double validity = 0.0;
  std::size_t knn_k = 0;
  std::size_t best_epoch = 0;
  std::optional<std::string> error;
};

struct AggregateRow {
  std::string family;
  double alpha = 0.0;
  std::size_t runs = 0;
  double size_mean = 0.0;
  double size_sd = 0.0;
  double validity_mean = 0.0;
  double validity_sd = 0.0;
};

struct ProtocolResult {
  std::vector<ProtocolRow> rows;
  std::vector<AggregateRow> table;
};

/// Repeats split / KNN fit / family training / evaluation for seeds
/// seed0 .. seed0 + runs - 1. The dataset must already be normalized. The
/// fixed baseline is always evaluated.
ProtocolResult run_protocol(const Dataset& normalized, ProtocolConfig config,
                            const std::function<void(const std::string&)>& progress = {});

/// Mean and population sd over successful rows, one entry per (family, alpha)
/// in first-seen order.
std::vector<AggregateRow> aggregate(std::span<const ProtocolRow> rows);

}  // namespace lacp
