#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace lacp {

/// Activations cached by a forward pass. Only valid for the parameter state
/// that produced it; backward rejects a tape once the network has changed.
struct ForwardTape {
  /// Column j of inputs[l] is the input to layer l for sample j.
  std::vector<Eigen::MatrixXd> inputs;
  /// Pre-activations of every layer (last entry is the output row).
  std::vector<Eigen::MatrixXd> preactivations;
  std::uint64_t stamp = 0;

  std::size_t batch_size() const noexcept {
    return inputs.empty() ? 0 : static_cast<std::size_t>(inputs.front().cols());
  }
  /// Smallest |pre-activation| over hidden units; used to stay clear of ReLU kinks.
  double min_abs_hidden_preactivation() const;
};

/// Fully connected ReLU network with a scalar linear output.
///
/// Parameters live in a single flat vector laid out layer by layer: the weight
/// matrix in row-major order (out x in) followed by the bias vector. Gradients
/// use the same layout.
class LocalizerNet {
 public:
  static constexpr std::size_t kHiddenWidth = 100;
  static constexpr std::size_t kHiddenLayers = 5;

  /// [d, 100, 100, 100, 100, 100, 1].
  static std::vector<std::size_t> default_layout(std::size_t input_dim);

  /// Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) weights, zero biases.
  static LocalizerNet init(std::size_t input_dim, std::uint64_t seed);
  static LocalizerNet init(std::vector<std::size_t> layer_dims, std::uint64_t seed);

  /// All parameters zero.
  explicit LocalizerNet(std::vector<std::size_t> layer_dims);
  LocalizerNet(std::vector<std::size_t> layer_dims, Eigen::VectorXd params);

  std::size_t input_dim() const noexcept { return dims_.front(); }
  std::size_t num_layers() const noexcept { return dims_.size() - 1; }
  std::size_t num_params() const noexcept { return static_cast<std::size_t>(params_.size()); }
  const std::vector<std::size_t>& layer_dims() const noexcept { return dims_; }

  const Eigen::VectorXd& params() const noexcept { return params_; }
  void set_params(Eigen::VectorXd params);
  /// In-place parameter update; invalidates outstanding tapes.
  void add_to_params(const Eigen::VectorXd& delta);

  using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Eigen::Map<const RowMajorMatrix> weights(std::size_t layer) const;
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;
  Eigen::Map<RowMajorMatrix> weights(std::size_t layer);
  Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);

  double evaluate(std::span<const double> x) const;
  /// One output per column of `x` (input_dim x m).
  Eigen::VectorXd evaluate_batch(const Eigen::MatrixXd& x) const;

  struct Output {
    double g;
    ForwardTape tape;
  };
  Output forward(std::span<const double> x) const;

  struct BatchOutput {
    Eigen::VectorXd g;
    ForwardTape tape;
  };
  BatchOutput forward_batch(const Eigen::MatrixXd& x) const;

  /// Reverse-mode pass: returns sum_j upstream[j] * d g_j / d params.
  Eigen::VectorXd backward(const ForwardTape& tape, std::span<const double> upstream) const;
  Eigen::VectorXd backward(const ForwardTape& tape, double upstream) const;

  /// Gradient of g(x) with respect to the parameters.
  Eigen::VectorXd param_gradient(std::span<const double> x) const;

  bool all_finite() const { return params_.allFinite(); }

 private:
  std::size_t offset(std::size_t layer) const { return offsets_[layer]; }
  void touch();

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
  std::uint64_t stamp_ = 0;
};

/// Bias-corrected Adam with per-parameter first/second moments.
struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  std::uint64_t step = 0;

  static AdamState for_net(const LocalizerNet& net, double learning_rate = 1e-3);
};

/// Applies one Adam update. Throws NumericalError on non-finite gradients.
void adam_step(LocalizerNet& net, const Eigen::VectorXd& grads, AdamState& state);

}  // namespace lacp
