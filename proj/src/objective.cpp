#include "lacp/objective.hpp"

#include "lacp/error.hpp"

#include <cmath>
#include <sstream>

namespace lacp {

LossBatch LossBatch::from(const ScoredSet& set, std::span<const std::size_t> rows) {
  LossBatch b{Dataset::Matrix(static_cast<Eigen::Index>(rows.size()), set.x.cols()),
              Eigen::VectorXd(static_cast<Eigen::Index>(rows.size()))};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto dst = static_cast<Eigen::Index>(r);
    const auto src = static_cast<Eigen::Index>(rows[r]);
    b.x.row(dst) = set.x.row(src);
    b.score[dst] = set.score[src];
  }
  return b;
}

LossBatch LossBatch::from(const ScoredSet& set) { return {set.x, set.score}; }

double loss_pair_term_at(const TransformFamily& family, double g_test, double g_cal, double score) {
  const double b = family.forward_at(score, g_cal);
  return std::sqrt(family.inverse_at(b, g_test));
}

double loss_pair_term(const TransformFamily& family, std::span<const double> x_test, std::span<const double> x_cal,
                      double score) {
  return loss_pair_term_at(family, family.localize(x_test), family.localize(x_cal), score);
}

LossValue loss_batch(const TransformFamily& family, const LossBatch& batch, bool with_gradient) {
  const std::size_t m = batch.size();
  if (m < 2) throw InvalidArgument("loss_batch: need at least two samples");

  const bool grad = with_gradient && family.has_localizer();
  Eigen::VectorXd g;
  ForwardTape tape;
  if (grad) {
    auto out = family.localizer().forward_batch(batch.x.transpose());
    g = std::move(out.g);
    tape = std::move(out.tape);
  } else {
    g = family.localize_rows(batch.x);
  }

  // Transformed calibration scores do not depend on the test role.
  Eigen::VectorXd b(static_cast<Eigen::Index>(m));
  Eigen::VectorXd db_dg(static_cast<Eigen::Index>(m));
  for (Eigen::Index n = 0; n < b.size(); ++n) {
    b[n] = family.forward_at(batch.score[n], g[n]);
    db_dg[n] = grad ? family.deriv_g_at(batch.score[n], g[n]) : 0.0;
  }

  double total = 0.0;
  Eigen::VectorXd upstream = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
  for (Eigen::Index t = 0; t < b.size(); ++t) {
    for (Eigen::Index n = 0; n < b.size(); ++n) {
      if (n == t) continue;
      const auto s = family.inverse_sensitivity_at(b[n], g[t]);
      const double width = std::sqrt(s.a);
      if (!std::isfinite(width)) {
        std::ostringstream msg;
        msg << "loss_batch: non-finite pair term (test " << t << ", calibration " << n << ")";
        throw NumericalError(msg.str());
      }
      total += width;
      // d sqrt(u)/du = 1/(2 sqrt(u)); undefined at u = 0 where the term is flat in practice.
      if (grad && width > 0.0) {
        const double half_inv = 0.5 / width;
        upstream[t] += s.d_g * half_inv;
        upstream[n] += s.d_b * db_dg[n] * half_inv;
      }
    }
  }
  const double norm = static_cast<double>(m) * static_cast<double>(m - 1);
  LossValue out{total / norm, {}};
  if (grad) {
    upstream /= norm;
    out.gradient = family.localizer().backward(tape, std::span<const double>(upstream.data(), m));
  }
  return out;
}

LossValue erc_error_fit_loss(const LocalizerNet& net, const LossBatch& batch, bool with_gradient) {
  const std::size_t m = batch.size();
  if (m == 0) throw InvalidArgument("erc_error_fit_loss: empty batch");
  auto out = net.forward_batch(batch.x.transpose());
  const Eigen::VectorXd residual = out.g - batch.score;
  LossValue loss{residual.squaredNorm() / static_cast<double>(m), {}};
  if (!std::isfinite(loss.value)) throw NumericalError("erc_error_fit_loss: non-finite loss");
  if (with_gradient) {
    const Eigen::VectorXd upstream = (2.0 / static_cast<double>(m)) * residual;
    loss.gradient = net.backward(out.tape, std::span<const double>(upstream.data(), m));
  }
  return loss;
}

double single_alpha_size(const TransformFamily& family, const ScoredSet& calibration, const ScoredSet& test,
                         double alpha) {
  const double a[] = {alpha};
  const auto reports = evaluate(family, calibration, test, a);
  if (!reports.front().ok()) throw InvalidArgument(*reports.front().error);
  return reports.front().mean_size;
}

}  // namespace lacp
