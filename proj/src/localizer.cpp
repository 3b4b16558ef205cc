#include "lacp/localizer.hpp"

#include "lacp/error.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <random>

namespace lacp {

namespace {

std::uint64_t next_stamp() {
  static std::atomic<std::uint64_t> counter{0};
  return ++counter;
}

std::vector<std::size_t> layer_offsets(const std::vector<std::size_t>& dims) {
  if (dims.size() < 2) throw InvalidArgument("localizer: need at least an input and an output layer");
  if (dims.back() != 1) throw InvalidArgument("localizer: output layer must have width 1");
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] == 0) throw InvalidArgument("localizer: zero-width layer");
    offsets.push_back(total);
    total += dims[l + 1] * dims[l] + dims[l + 1];
  }
  offsets.push_back(total);
  return offsets;
}

}  // namespace

double ForwardTape::min_abs_hidden_preactivation() const {
  double m = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < preactivations.size(); ++l) {
    if (preactivations[l].size() > 0) m = std::min(m, preactivations[l].cwiseAbs().minCoeff());
  }
  return m;
}

std::vector<std::size_t> LocalizerNet::default_layout(std::size_t input_dim) {
  std::vector<std::size_t> dims{input_dim};
  for (std::size_t i = 0; i < kHiddenLayers; ++i) dims.push_back(kHiddenWidth);
  dims.push_back(1);
  return dims;
}

LocalizerNet LocalizerNet::init(std::size_t input_dim, std::uint64_t seed) {
  if (input_dim < 1) throw InvalidArgument("localizer: input dimension must be positive");
  return init(default_layout(input_dim), seed);
}

LocalizerNet LocalizerNet::init(std::vector<std::size_t> layer_dims, std::uint64_t seed) {
  LocalizerNet net(std::move(layer_dims));
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.dims_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    auto w = net.weights(l);
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = dist(rng);
  }
  net.touch();
  return net;
}

LocalizerNet::LocalizerNet(std::vector<std::size_t> layer_dims)
    : dims_(std::move(layer_dims)), offsets_(layer_offsets(dims_)),
      params_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(offsets_.back()))), stamp_(next_stamp()) {}

LocalizerNet::LocalizerNet(std::vector<std::size_t> layer_dims, Eigen::VectorXd params)
    : LocalizerNet(std::move(layer_dims)) {
  set_params(std::move(params));
}

void LocalizerNet::set_params(Eigen::VectorXd params) {
  if (params.size() != params_.size()) throw InvalidArgument("localizer: parameter count mismatch");
  if (!params.allFinite()) throw NumericalError("localizer: non-finite parameters");
  params_ = std::move(params);
  touch();
}

void LocalizerNet::add_to_params(const Eigen::VectorXd& delta) {
  if (delta.size() != params_.size()) throw InvalidArgument("localizer: parameter count mismatch");
  params_ += delta;
  touch();
}

void LocalizerNet::touch() { stamp_ = next_stamp(); }

Eigen::Map<const LocalizerNet::RowMajorMatrix> LocalizerNet::weights(std::size_t layer) const {
  return {params_.data() + offset(layer), static_cast<Eigen::Index>(dims_[layer + 1]),
          static_cast<Eigen::Index>(dims_[layer])};
}

Eigen::Map<const Eigen::VectorXd> LocalizerNet::bias(std::size_t layer) const {
  return {params_.data() + offset(layer) + dims_[layer + 1] * dims_[layer],
          static_cast<Eigen::Index>(dims_[layer + 1])};
}

Eigen::Map<LocalizerNet::RowMajorMatrix> LocalizerNet::weights(std::size_t layer) {
  return {params_.data() + offset(layer), static_cast<Eigen::Index>(dims_[layer + 1]),
          static_cast<Eigen::Index>(dims_[layer])};
}

Eigen::Map<Eigen::VectorXd> LocalizerNet::bias(std::size_t layer) {
  return {params_.data() + offset(layer) + dims_[layer + 1] * dims_[layer],
          static_cast<Eigen::Index>(dims_[layer + 1])};
}

LocalizerNet::BatchOutput LocalizerNet::forward_batch(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim()) throw InvalidArgument("localizer: attribute dimension mismatch");
  BatchOutput out;
  out.tape.stamp = stamp_;
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weights(l) * h;
    z.colwise() += bias(l);
    out.tape.inputs.push_back(std::move(h));
    if (l + 1 < num_layers()) {
      h = z.cwiseMax(0.0);
    } else {
      out.g = z.row(0).transpose();
    }
    out.tape.preactivations.push_back(std::move(z));
  }
  if (!out.g.allFinite()) throw NumericalError("localizer: non-finite output");
  return out;
}

LocalizerNet::Output LocalizerNet::forward(std::span<const double> x) const {
  const Eigen::Map<const Eigen::MatrixXd> col(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  auto batch = forward_batch(col);
  return {batch.g[0], std::move(batch.tape)};
}

Eigen::VectorXd LocalizerNet::evaluate_batch(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.rows()) != input_dim()) throw InvalidArgument("localizer: attribute dimension mismatch");
  Eigen::MatrixXd h = x;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    Eigen::MatrixXd z = weights(l) * h;
    z.colwise() += bias(l);
    h = (l + 1 < num_layers()) ? Eigen::MatrixXd(z.cwiseMax(0.0)) : std::move(z);
  }
  return h.row(0).transpose();
}

double LocalizerNet::evaluate(std::span<const double> x) const {
  const Eigen::Map<const Eigen::MatrixXd> col(x.data(), static_cast<Eigen::Index>(x.size()), 1);
  return evaluate_batch(col)[0];
}

Eigen::VectorXd LocalizerNet::backward(const ForwardTape& tape, std::span<const double> upstream) const {
  if (tape.stamp != stamp_ || tape.inputs.size() != num_layers()) {
    throw InvalidArgument("localizer: stale tape (network changed since forward)");
  }
  const auto m = static_cast<Eigen::Index>(tape.batch_size());
  if (static_cast<Eigen::Index>(upstream.size()) != m) throw InvalidArgument("localizer: upstream size mismatch");

  Eigen::VectorXd grads = Eigen::VectorXd::Zero(params_.size());
  Eigen::MatrixXd delta = Eigen::Map<const Eigen::RowVectorXd>(upstream.data(), m);
  for (std::size_t l = num_layers(); l-- > 0;) {
    const auto& input = tape.inputs[l];
    Eigen::Map<RowMajorMatrix> dw(grads.data() + offset(l), static_cast<Eigen::Index>(dims_[l + 1]),
                                  static_cast<Eigen::Index>(dims_[l]));
    Eigen::Map<Eigen::VectorXd> db(grads.data() + offset(l) + dims_[l + 1] * dims_[l],
                                   static_cast<Eigen::Index>(dims_[l + 1]));
    dw.noalias() = delta * input.transpose();
    db = delta.rowwise().sum();
    if (l == 0) break;
    Eigen::MatrixXd back = weights(l).transpose() * delta;
    // ReLU subgradient at zero is taken as zero.
    delta = back.cwiseProduct((tape.preactivations[l - 1].array() > 0.0).cast<double>().matrix());
  }
  return grads;
}

Eigen::VectorXd LocalizerNet::backward(const ForwardTape& tape, double upstream) const {
  return backward(tape, std::span<const double>(&upstream, 1));
}

Eigen::VectorXd LocalizerNet::param_gradient(std::span<const double> x) const {
  const auto out = forward(x);
  return backward(out.tape, 1.0);
}

AdamState AdamState::for_net(const LocalizerNet& net, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  s.first_moment = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.num_params()));
  s.second_moment = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.num_params()));
  return s;
}

void adam_step(LocalizerNet& net, const Eigen::VectorXd& grads, AdamState& state) {
  const auto n = static_cast<Eigen::Index>(net.num_params());
  if (grads.size() != n || state.first_moment.size() != n || state.second_moment.size() != n) {
    throw InvalidArgument("adam: shape mismatch");
  }
  if (!grads.allFinite()) throw NumericalError("adam: non-finite gradient");
  ++state.step;
  const double t = static_cast<double>(state.step);
  state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * grads;
  state.second_moment = state.beta2 * state.second_moment + (1.0 - state.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  const Eigen::VectorXd update =
      -state.learning_rate * (state.first_moment / c1).array() / ((state.second_moment / c2).array().sqrt() + state.epsilon);
  net.add_to_params(update);
}

}  // namespace lacp
