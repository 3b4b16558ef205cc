#include "lacp/training.hpp"

#include "lacp/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

namespace lacp {

std::string FamilyChoice::label() const {
  return error_fit ? std::string(to_string(kind)) + "-fit" : std::string(to_string(kind));
}

FamilyChoice FamilyChoice::parse(std::string_view name) {
  if (name == "erc-fit") return {FamilyKind::erc, true};
  const auto kind = family_from_string(name);
  if (kind != FamilyKind::fixed && !is_trainable(kind)) {
    throw InvalidArgument("family '" + std::string(name) + "' is not available for training");
  }
  return {kind, false};
}

double validation_loss(const TransformFamily& family, const ScoredSet& validation) {
  return loss_batch(family, LossBatch::from(validation), false).value;
}

namespace {

using BatchGradient = std::function<LossValue(const TransformFamily&, const LossBatch&)>;

TrainResult run_training(const TrainConfig& config, const ScoredSet& cp_train, const ScoredSet& validation,
                         const BatchGradient& batch_gradient) {
  if (!is_trainable(config.family.kind)) throw InvalidArgument("train: family is not trainable");
  if (config.batch_size < 2) throw InvalidArgument("train: batch size must be at least 2");
  if (config.patience < 1) throw InvalidArgument("train: patience must be at least 1");
  if (cp_train.size() < config.batch_size) throw InvalidArgument("train: fewer training samples than batch size");
  if (validation.size() < 2) throw InvalidArgument("train: validation set needs at least two samples");

  const auto d = static_cast<std::size_t>(cp_train.x.cols());
  TransformFamily family(config.family.kind, LocalizerNet::init(d, config.seed), config.options);
  AdamState adam = AdamState::for_net(family.localizer(), config.learning_rate);

  TrainTrace trace;
  trace.initial_val_loss = validation_loss(family, validation);
  trace.best_val_loss = trace.initial_val_loss;
  if (!std::isfinite(trace.initial_val_loss)) throw TrainingDiverged("train: non-finite initial validation loss", trace);
  Eigen::VectorXd best_params = family.localizer().params();

  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(cp_train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t batches = 0;
    try {
      for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
        const std::size_t end = std::min(order.size(), start + config.batch_size);
        if (end - start < 2) continue;
        const auto batch = LossBatch::from(cp_train, std::span(order).subspan(start, end - start));
        const auto loss = batch_gradient(family, batch);
        if (!std::isfinite(loss.value)) throw NumericalError("non-finite training loss");
        adam_step(family.localizer(), loss.gradient, adam);
        loss_sum += loss.value;
        ++batches;
      }
      const double val = validation_loss(family, validation);
      if (!std::isfinite(val)) throw NumericalError("non-finite validation loss");
      trace.epochs.push_back({epoch, loss_sum / static_cast<double>(std::max<std::size_t>(batches, 1)), val});
    } catch (const Error& e) {
      throw TrainingDiverged("train: diverged at epoch " + std::to_string(epoch) + ": " + e.what(), trace);
    }

    const double val = trace.epochs.back().val_loss;
    if (val < trace.best_val_loss) {
      trace.best_val_loss = val;
      trace.best_epoch = epoch;
      best_params = family.localizer().params();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  family.localizer().set_params(best_params);
  return {std::move(family), std::move(trace)};
}

}  // namespace

TrainResult train(const TrainConfig& config, const ScoredSet& cp_train, const ScoredSet& validation) {
  return run_training(config, cp_train, validation,
                      [](const TransformFamily& family, const LossBatch& batch) { return loss_batch(family, batch); });
}

TrainResult train_erc_error_fit(const TrainConfig& config, const ScoredSet& cp_train, const ScoredSet& validation) {
  if (config.family.kind != FamilyKind::erc) throw InvalidArgument("error fit applies to the erc family only");
  return run_training(config, cp_train, validation, [](const TransformFamily& family, const LossBatch& batch) {
    return erc_error_fit_loss(family.localizer(), batch);
  });
}

TrainResult train_family(const TrainConfig& config, const ScoredSet& cp_train, const ScoredSet& validation) {
  if (config.family.kind == FamilyKind::fixed) {
    auto family = TransformFamily::fixed();
    TrainTrace trace;
    trace.initial_val_loss = trace.best_val_loss = validation_loss(family, validation);
    return {std::move(family), std::move(trace)};
  }
  return config.family.error_fit ? train_erc_error_fit(config, cp_train, validation)
                                 : train(config, cp_train, validation);
}

std::vector<AggregateRow> aggregate(std::span<const ProtocolRow> rows) {
  std::vector<AggregateRow> table;
  std::map<std::pair<std::string, double>, std::vector<const ProtocolRow*>> groups;
  for (const auto& r : rows) {
    auto key = std::pair{r.family, r.alpha};
    if (!groups.contains(key)) table.push_back({r.family, r.alpha});
    if (!r.error) groups[key].push_back(&r);
    else groups.try_emplace(key);
  }
  for (auto& t : table) {
    const auto& members = groups[{t.family, t.alpha}];
    t.runs = members.size();
    if (members.empty()) continue;
    const double n = static_cast<double>(members.size());
    for (const auto* r : members) {
      t.size_mean += r->mean_size / n;
      t.validity_mean += r->validity / n;
    }
    for (const auto* r : members) {
      t.size_sd += (r->mean_size - t.size_mean) * (r->mean_size - t.size_mean) / n;
      t.validity_sd += (r->validity - t.validity_mean) * (r->validity - t.validity_mean) / n;
    }
    t.size_sd = std::sqrt(t.size_sd);
    t.validity_sd = std::sqrt(t.validity_sd);
  }
  return table;
}

ProtocolResult run_protocol(const Dataset& normalized, ProtocolConfig config,
                            const std::function<void(const std::string&)>& progress) {
  if (config.runs < 1) throw InvalidArgument("protocol: runs must be at least 1");
  if (config.alphas.empty()) throw InvalidArgument("protocol: no alpha values");
  const FamilyChoice fixed{FamilyKind::fixed, false};
  if (std::find(config.families.begin(), config.families.end(), fixed) == config.families.end()) {
    config.families.push_back(fixed);
  }

  ProtocolResult result;
  for (std::size_t run = 0; run < config.runs; ++run) {
    const std::uint64_t seed = config.seed0 + run;
    SplitSpec split_spec = config.split;
    split_spec.seed = seed;
    const auto parts = split(normalized, split_spec);

    KnnFitOptions knn_options = config.knn;
    knn_options.seed = seed;
    knn_options.clip_grid = true;
    const auto knn = fit_knn(parts.proper_train, knn_options);
    const auto cp_train = make_scored_set(parts.cp_train, knn.predict(parts.cp_train));
    const auto validation = make_scored_set(parts.validation, knn.predict(parts.validation));
    const auto test = make_scored_set(parts.test, knn.predict(parts.test));

    for (const auto& choice : config.families) {
      TrainConfig tc = config.train;
      tc.family = choice;
      tc.seed = seed;
      if (progress) progress("run seed " + std::to_string(seed) + ": " + choice.label());
      std::vector<ProtocolRow> rows;
      try {
        const auto trained = train_family(tc, cp_train, validation);
        for (const auto& rep : evaluate(trained.family, cp_train, test, config.alphas)) {
          rows.push_back({config.dataset_name, choice.label(), rep.alpha, seed, rep.mean_size, rep.validity,
                          knn.k(), trained.trace.best_epoch, rep.error});
        }
      } catch (const Error& e) {
        for (double alpha : config.alphas) {
          rows.push_back({config.dataset_name, choice.label(), alpha, seed, 0.0, 0.0, knn.k(), 0, std::string(e.what())});
        }
      }
      result.rows.insert(result.rows.end(), rows.begin(), rows.end());
    }
  }
  result.table = aggregate(result.rows);
  return result;
}

}  // namespace lacp
