#include "lacp/transforms.hpp"

#include "lacp/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>
#include <utility>

namespace lacp {

namespace {

constexpr std::array<std::pair<FamilyKind, std::string_view>, 10> kNames{{
    {FamilyKind::fixed, "fixed"},
    {FamilyKind::log, "log"},
    {FamilyKind::erc, "erc"},
    {FamilyKind::linear, "linear"},
    {FamilyKind::exp, "exp"},
    {FamilyKind::sigma, "sigma"},
    {FamilyKind::shifted_root, "fixture-shifted-root"},
    {FamilyKind::additive, "fixture-additive"},
    {FamilyKind::additive_log, "fixture-additive-log"},
    {FamilyKind::cube, "fixture-cube"},
}};

bool uses_log(FamilyKind kind) {
  return kind == FamilyKind::log || kind == FamilyKind::linear || kind == FamilyKind::sigma ||
         kind == FamilyKind::additive_log;
}

}  // namespace

std::string_view to_string(FamilyKind kind) {
  for (const auto& [k, name] : kNames)
    if (k == kind) return name;
  return "unknown";
}

FamilyKind family_from_string(std::string_view name) {
  for (const auto& [k, n] : kNames)
    if (n == name) return k;
  throw InvalidArgument("unknown family '" + std::string(name) + "'");
}

bool uses_localizer(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::fixed:
    case FamilyKind::log:
    case FamilyKind::cube:
      return false;
    default:
      return true;
  }
}

bool is_trainable(FamilyKind kind) {
  return kind == FamilyKind::erc || kind == FamilyKind::linear || kind == FamilyKind::exp ||
         kind == FamilyKind::sigma;
}

bool has_closed_inverse(FamilyKind kind) { return kind != FamilyKind::cube; }

double logistic(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double logit(double b) {
  constexpr double kEdge = 1e-15;
  b = std::clamp(b, kEdge, 1.0 - kEdge);
  return std::log(b) - std::log1p(-b);
}

TransformFamily::TransformFamily(FamilyKind kind, std::optional<LocalizerNet> localizer, FamilyOptions options)
    : kind_(kind), localizer_(std::move(localizer)), options_(options) {
  if (uses_localizer(kind_) && !localizer_) {
    throw InvalidArgument(std::string("family '") + std::string(to_string(kind_)) + "' needs a localizer");
  }
  if (!uses_localizer(kind_)) localizer_.reset();
  if (kind_ == FamilyKind::erc && !(options_.gamma > 0.0)) throw InvalidArgument("erc: gamma must be positive");
  if (!(options_.epsilon_floor > 0.0)) throw InvalidArgument("epsilon_floor must be positive");
  if (kind_ == FamilyKind::additive_log && !(options_.repair_epsilon > 0.0)) {
    throw InvalidArgument("additive_log: repair epsilon must be positive");
  }
}

TransformFamily TransformFamily::fixed() { return TransformFamily(FamilyKind::fixed, std::nullopt); }

const LocalizerNet& TransformFamily::localizer() const {
  if (!localizer_) throw InvalidArgument("family has no localizer");
  return *localizer_;
}

LocalizerNet& TransformFamily::localizer() {
  if (!localizer_) throw InvalidArgument("family has no localizer");
  return *localizer_;
}

double TransformFamily::localize(std::span<const double> x) const {
  if (!localizer_) return 0.0;
  const double g = localizer_->evaluate(x);
  if (!std::isfinite(g)) throw NumericalError("localizer produced a non-finite value");
  return g;
}

Eigen::VectorXd TransformFamily::localize_rows(
    const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& x) const {
  if (!localizer_) return Eigen::VectorXd::Zero(x.rows());
  Eigen::VectorXd g = localizer_->evaluate_batch(x.transpose());
  if (!g.allFinite()) throw NumericalError("localizer produced a non-finite value");
  return g;
}

double TransformFamily::clamp_a(double a) const { return uses_log(kind_) ? std::max(a, options_.epsilon_floor) : a; }

double TransformFamily::law(double a, double g) const {
  switch (kind_) {
    case FamilyKind::fixed:
      return a;
    case FamilyKind::log:
      return std::log(a) + options_.log_offset;
    case FamilyKind::erc:
      return a / (g * g + options_.gamma);
    case FamilyKind::linear:
      return std::log(a) + g;
    case FamilyKind::exp:
      return a * std::exp(g);
    case FamilyKind::sigma:
      return logistic(std::log(a) + g);
    case FamilyKind::shifted_root:
      return std::sqrt(a) + g;
    case FamilyKind::additive:
      return a + g * g;
    case FamilyKind::additive_log:
      return (1.0 + options_.repair_epsilon) * std::log(a) + g * g;
    case FamilyKind::cube:
      return a * a * a;
  }
  return a;
}

double TransformFamily::forward_at(double a, double g) const {
  if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("score must be finite and nonnegative");
  if (!std::isfinite(g)) throw NumericalError("non-finite localizer value");
  return law(clamp_a(a), g);
}

bool TransformFamily::in_codomain(double b, double g) const {
  if (!std::isfinite(b)) return false;
  switch (kind_) {
    case FamilyKind::fixed:
    case FamilyKind::erc:
    case FamilyKind::exp:
    case FamilyKind::cube:
      return b >= 0.0;
    case FamilyKind::sigma:
      return b > 0.0 && b < 1.0;
    case FamilyKind::additive:
      return b >= g * g;
    case FamilyKind::log:
    case FamilyKind::linear:
    case FamilyKind::additive_log:
    case FamilyKind::shifted_root:
      return true;
  }
  return true;
}

void TransformFamily::check_codomain(double b, double g) const {
  if (!std::isfinite(g)) throw NumericalError("non-finite localizer value");
  if (!in_codomain(b, g)) {
    std::ostringstream msg;
    msg << "score " << b << " lies outside the codomain of '" << to_string(kind_) << "' at g=" << g;
    throw CodomainError(msg.str());
  }
}

double TransformFamily::numeric_inverse_at(double b, double g, Bracket bracket, std::optional<double> tol) const {
  check_codomain(b, g);
  return bisect_increasing([&](double a) { return law(a, g); }, b, bracket, tol.value_or(options_.bisection_tol));
}

double TransformFamily::inverse_at(double b, double g) const {
  check_codomain(b, g);
  if (options_.inverse_mode == InverseMode::numeric || !has_closed_inverse(kind_)) {
    return numeric_inverse_at(b, g);
  }
  switch (kind_) {
    case FamilyKind::fixed:
      return b;
    case FamilyKind::log:
      return std::exp(b - options_.log_offset);
    case FamilyKind::erc:
      return b * (g * g + options_.gamma);
    case FamilyKind::linear:
      return std::exp(b - g);
    case FamilyKind::exp:
      return b * std::exp(-g);
    case FamilyKind::sigma:
      return std::exp(logit(b) - g);
    case FamilyKind::shifted_root:
      return (b - g) * (b - g);
    case FamilyKind::additive:
      return b - g * g;
    case FamilyKind::additive_log:
      return std::exp((b - g * g) / (1.0 + options_.repair_epsilon));
    case FamilyKind::cube:
      break;
  }
  return numeric_inverse_at(b, g);
}

double TransformFamily::deriv_a_at(double a, double g) const {
  const double ac = clamp_a(a);
  switch (kind_) {
    case FamilyKind::fixed:
      return 1.0;
    case FamilyKind::log:
    case FamilyKind::linear:
      return 1.0 / ac;
    case FamilyKind::erc:
      return 1.0 / (g * g + options_.gamma);
    case FamilyKind::exp:
      return std::exp(g);
    case FamilyKind::sigma: {
      const double s = logistic(std::log(ac) + g);
      return s * (1.0 - s) / ac;
    }
    case FamilyKind::shifted_root:
      return 0.5 / std::sqrt(a);
    case FamilyKind::additive:
      return 1.0;
    case FamilyKind::additive_log:
      return (1.0 + options_.repair_epsilon) / ac;
    case FamilyKind::cube:
      return 3.0 * a * a;
  }
  return 1.0;
}

double TransformFamily::deriv_g_at(double a, double g) const {
  const double ac = clamp_a(a);
  switch (kind_) {
    case FamilyKind::fixed:
    case FamilyKind::log:
    case FamilyKind::cube:
      return 0.0;
    case FamilyKind::erc: {
      const double s = g * g + options_.gamma;
      return -2.0 * g * ac / (s * s);
    }
    case FamilyKind::linear:
    case FamilyKind::shifted_root:
      return 1.0;
    case FamilyKind::exp:
      return ac * std::exp(g);
    case FamilyKind::sigma: {
      const double s = logistic(std::log(ac) + g);
      return s * (1.0 - s);
    }
    case FamilyKind::additive:
    case FamilyKind::additive_log:
      return 2.0 * g;
  }
  return 0.0;
}

InverseSensitivity TransformFamily::implicit_inverse_sensitivity_at(double b, double g) const {
  const double a = numeric_inverse_at(b, g);
  const double slope = deriv_a_at(a, g);
  if (!(slope > 0.0)) throw NumericalError("non-positive derivative in A; monotonicity violated");
  return {a, -deriv_g_at(a, g) / slope, 1.0 / slope};
}

InverseSensitivity TransformFamily::inverse_sensitivity_at(double b, double g) const {
  if (options_.inverse_mode == InverseMode::numeric || !has_closed_inverse(kind_)) {
    return implicit_inverse_sensitivity_at(b, g);
  }
  const double a = inverse_at(b, g);
  switch (kind_) {
    case FamilyKind::fixed:
      return {a, 0.0, 1.0};
    case FamilyKind::log:
      return {a, 0.0, a};
    case FamilyKind::erc:
      return {a, 2.0 * g * b, g * g + options_.gamma};
    case FamilyKind::linear:
      return {a, -a, a};
    case FamilyKind::exp:
      return {a, -a, std::exp(-g)};
    case FamilyKind::sigma: {
      const double bc = std::clamp(b, 1e-15, 1.0 - 1e-15);
      return {a, -a, a / (bc * (1.0 - bc))};
    }
    case FamilyKind::shifted_root:
      return {a, -2.0 * (b - g), 2.0 * (b - g)};
    case FamilyKind::additive:
      return {a, -2.0 * g, 1.0};
    case FamilyKind::additive_log: {
      const double k = 1.0 + options_.repair_epsilon;
      return {a, -2.0 * g * a / k, a / k};
    }
    case FamilyKind::cube:
      break;
  }
  return implicit_inverse_sensitivity_at(b, g);
}

double TransformFamily::forward(std::span<const double> x, double a) const { return forward_at(a, localize(x)); }

double TransformFamily::inverse(std::span<const double> x, double b) const { return inverse_at(b, localize(x)); }

double TransformFamily::deriv_a(std::span<const double> x, double a) const { return deriv_a_at(a, localize(x)); }

double TransformFamily::numeric_inverse(std::span<const double> x, double b, Bracket bracket,
                                        std::optional<double> tol) const {
  return numeric_inverse_at(b, localize(x), bracket, tol);
}

InverseGradient TransformFamily::grad_inverse_params(std::span<const double> x, double b) const {
  if (!localizer_) {
    const auto s = implicit_inverse_sensitivity_at(b, 0.0);
    return {Eigen::VectorXd(), s.d_b};
  }
  const auto out = localizer_->forward(x);
  // With theta entering only through g: grad_theta phi^{-1} = (d_g phi^{-1}) grad_theta g.
  InverseSensitivity s{};
  if (options_.inverse_mode == InverseMode::numeric || !has_closed_inverse(kind_)) {
    s = implicit_inverse_sensitivity_at(b, out.g);
  } else {
    check_codomain(b, out.g);
    const double a = inverse_at(b, out.g);
    const double slope = deriv_a_at(a, out.g);
    if (!(slope > 0.0)) throw NumericalError("non-positive derivative in A; monotonicity violated");
    s = {a, -deriv_g_at(a, out.g) / slope, 1.0 / slope};
  }
  return {localizer_->backward(out.tape, s.d_g), s.d_b};
}

}  // namespace lacp
