#pragma once

#include "lacp/bisection.hpp"
#include "lacp/localizer.hpp"

#include <optional>
#include <span>
#include <string>
#include <string_view>

namespace lacp {

/// Score transformation families phi_x(A), with g = g(x) the localizer output.
///
///   fixed       A
///   log         log A + offset                 (attribute independent)
///   erc         A / (g^2 + gamma)
///   linear      log A + g
///   exp         A e^g
///   sigma       logistic(log A + g)
///
/// The remaining kinds are fixtures that reproduce failure modes of
/// attribute-dependent maps; they are not offered for training.
///
///   shifted_root     sqrt(A) + g, inverted by the formal (B - g)^2
///   additive         A + g^2, codomain [g^2, inf) depends on x
///   additive_log     (1 + eps) log A + g^2, the log-composed repair of additive
///   cube             A^3, no closed-form inverse
enum class FamilyKind { fixed, log, erc, linear, exp, sigma, shifted_root, additive, additive_log, cube };

std::string_view to_string(FamilyKind kind);
/// Throws InvalidArgument for unknown names.
FamilyKind family_from_string(std::string_view name);

bool uses_localizer(FamilyKind kind);
/// Kinds that can be fit by minimizing the averaged interval size.
bool is_trainable(FamilyKind kind);
bool has_closed_inverse(FamilyKind kind);

enum class InverseMode {
  /// Closed-form inverse and inverse derivatives when the kind has them.
  analytic,
  /// Bisection inverse and implicit-function derivatives for every kind.
  numeric,
};

struct FamilyOptions {
  double gamma = 1e-2;
  double log_offset = 0.0;
  /// A is clamped to at least this value before any logarithm.
  double epsilon_floor = 1e-12;
  double repair_epsilon = 0.1;
  InverseMode inverse_mode = InverseMode::analytic;
  double bisection_tol = 1e-12;
};

/// phi^{-1}(B) together with its sensitivities at fixed x:
/// d_g = d phi^{-1}(B) / d g and d_b = d phi^{-1}(B) / d B.
struct InverseSensitivity {
  double a;
  double d_g;
  double d_b;
};

/// Gradient of phi_x^{-1}(B) w.r.t. the localizer parameters (empty when the
/// family has no localizer) and its derivative in B.
struct InverseGradient {
  Eigen::VectorXd d_params;
  double d_b;
};

/// A monotone, attribute-dependent change of variables for conformity scores.
/// Kinds with a localizer carry a LocalizerNet giving g(x); the scalar laws
/// below take g directly so callers can batch the network evaluation.
class TransformFamily {
 public:
  TransformFamily(FamilyKind kind, std::optional<LocalizerNet> localizer, FamilyOptions options = {});

  static TransformFamily fixed();

  FamilyKind kind() const noexcept { return kind_; }
  const FamilyOptions& options() const noexcept { return options_; }
  FamilyOptions& options() noexcept { return options_; }
  bool has_localizer() const noexcept { return localizer_.has_value(); }
  const LocalizerNet& localizer() const;
  LocalizerNet& localizer();

  /// g(x); zero for kinds without a localizer.
  double localize(std::span<const double> x) const;
  /// g for every row of `x` (rows are samples).
  Eigen::VectorXd localize_rows(const Eigen::Ref<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>& x) const;

  // Scalar laws at a given localizer value.
  double forward_at(double a, double g) const;
  double inverse_at(double b, double g) const;
  double deriv_a_at(double a, double g) const;
  /// d phi / d g at fixed A.
  double deriv_g_at(double a, double g) const;
  bool in_codomain(double b, double g) const;
  /// Bisection inverse of the unclamped law.
  double numeric_inverse_at(double b, double g, Bracket bracket = {}, std::optional<double> tol = {}) const;
  /// Sensitivities through the configured inverse mode.
  InverseSensitivity inverse_sensitivity_at(double b, double g) const;
  /// Sensitivities from a bisection inverse and the implicit relations
  /// 0 = d_g phi + phi' d_g phi^{-1} and 1 = phi' d_b phi^{-1}.
  InverseSensitivity implicit_inverse_sensitivity_at(double b, double g) const;

  // Attribute-level operations.
  double forward(std::span<const double> x, double a) const;
  double inverse(std::span<const double> x, double b) const;
  double deriv_a(std::span<const double> x, double a) const;
  double numeric_inverse(std::span<const double> x, double b, Bracket bracket = {},
                         std::optional<double> tol = {}) const;
  InverseGradient grad_inverse_params(std::span<const double> x, double b) const;

 private:
  double clamp_a(double a) const;
  double law(double a, double g) const;
  void check_codomain(double b, double g) const;

  FamilyKind kind_;
  std::optional<LocalizerNet> localizer_;
  FamilyOptions options_;
};

double logistic(double z);
/// log(b) - log(1 - b) with b clamped to [1e-15, 1 - 1e-15].
double logit(double b);

}  // namespace lacp
