#include "helpers.hpp"

#include "lacp/error.hpp"
#include "lacp/objective.hpp"

#include <doctest.h>

#include <numbers>

using namespace lacp;
using namespace lacp::testing;

namespace {

LossBatch random_batch(std::size_t m, std::size_t d, std::mt19937_64& rng) {
  const auto set = random_scored_set(m, d, rng);
  return LossBatch::from(set);
}

}  // namespace

TEST_CASE("pair term self-cancels when localizer values coincide") {
  for (auto kind : trainable_kinds()) {
    const TransformFamily fam(kind, affine_net(0.0));
    CHECK(loss_pair_term_at(fam, 0.8, 0.8, 4.0) == doctest::Approx(2.0).epsilon(1e-12));
  }
  CHECK(loss_pair_term_at(TransformFamily::fixed(), 0.0, 0.0, 4.0) == 2.0);
}

TEST_CASE("pair term of the exp family") {
  const TransformFamily exp(FamilyKind::exp, affine_net(0.0));
  CHECK(loss_pair_term_at(exp, 0.5, 2.5, 1.0) == doctest::Approx(std::numbers::e).epsilon(1e-14));
  const double xt = 0.5, xc = 2.5;
  const TransformFamily exp_x(FamilyKind::exp, affine_net(1.0));
  CHECK(loss_pair_term(exp_x, std::span(&xt, 1), std::span(&xc, 1), 1.0) ==
        doctest::Approx(std::numbers::e).epsilon(1e-14));
}

TEST_CASE("fixed-family loss is the mean root score with no gradient") {
  std::mt19937_64 rng(1);
  const auto batch = random_batch(7, 2, rng);
  const auto loss = loss_batch(TransformFamily::fixed(), batch);
  CHECK(loss.value == doctest::Approx(batch.score.cwiseSqrt().mean()).epsilon(1e-13));
  CHECK(loss.gradient.size() == 0);
}

TEST_CASE("two equal attributes give the mean root score for every family") {
  LossBatch batch;
  batch.x = Dataset::Matrix::Constant(2, 2, 0.3);
  batch.score = Eigen::Vector2d(1.0, 9.0);
  for (auto kind : trainable_kinds()) {
    const TransformFamily fam(kind, LocalizerNet::init(2, 4));
    CHECK(loss_batch(fam, batch).value == doctest::Approx(2.0).epsilon(1e-12));
  }
}

TEST_CASE("constant localizer reproduces the fixed-family loss") {
  std::mt19937_64 rng(2);
  const auto batch = random_batch(16, 3, rng);
  LocalizerNet constant(LocalizerNet::default_layout(3));
  constant.bias(constant.num_layers() - 1)[0] = -0.6;
  const double fixed = loss_batch(TransformFamily::fixed(), batch).value;
  for (auto kind : trainable_kinds()) {
    CHECK(loss_batch(TransformFamily(kind, constant), batch).value == doctest::Approx(fixed).epsilon(1e-12));
  }
}

TEST_CASE("batch loss needs two samples") {
  LossBatch batch;
  batch.x = Dataset::Matrix::Zero(1, 1);
  batch.score = Eigen::VectorXd::Ones(1);
  CHECK_THROWS_AS(loss_batch(TransformFamily::fixed(), batch), InvalidArgument);
}

TEST_CASE("loss gradient matches finite differences along random directions") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  for (auto kind : trainable_kinds()) {
    CAPTURE(to_string(kind));
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      TransformFamily fam(kind, LocalizerNet::init(2, seed));
      const auto batch = LossBatch::from(off_kink_set(fam.localizer(), 8, rng));
      const auto loss = loss_batch(fam, batch);
      for (int dir = 0; dir < 10; ++dir) {
        Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(loss.gradient.size(), [&] { return nd(rng); });
        v.normalize();
        const double h = 1e-5;
        auto plus = fam, minus = fam;
        plus.localizer().add_to_params(h * v);
        minus.localizer().add_to_params(-h * v);
        const double fd = (loss_batch(plus, batch, false).value - loss_batch(minus, batch, false).value) / (2 * h);
        const double an = loss.gradient.dot(v);
        CHECK(std::abs(fd - an) <= 1e-5 * std::max(1e-3, std::abs(an)));
      }
    }
  }
}

TEST_CASE("numeric inverse path reproduces the analytic gradient for exp") {
  std::mt19937_64 rng(5);
  FamilyOptions numeric;
  numeric.inverse_mode = InverseMode::numeric;
  const auto net = LocalizerNet::init(2, 8);
  const TransformFamily closed(FamilyKind::exp, net), bisected(FamilyKind::exp, net, numeric);
  const auto batch = random_batch(10, 2, rng);
  const auto a = loss_batch(closed, batch), b = loss_batch(bisected, batch);
  CHECK(rel_err(a.value, b.value) <= 1e-8);
  CHECK((a.gradient - b.gradient).cwiseAbs().maxCoeff() <= 1e-8 * std::max(1.0, a.gradient.cwiseAbs().maxCoeff()));
}

TEST_CASE("error-fit loss") {
  LossBatch batch;
  batch.x = Dataset::Matrix::Zero(2, 1);
  batch.score = Eigen::Vector2d(1.0, 4.0);
  const LocalizerNet zero({1, 4, 1});
  CHECK(erc_error_fit_loss(zero, batch).value == 8.5);

  Eigen::VectorXd p = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(zero.num_params()));
  p[p.size() - 1] = 2.5;
  batch.score = Eigen::Vector2d(2.5, 2.5);
  CHECK(erc_error_fit_loss(LocalizerNet({1, 4, 1}, p), batch).value == 0.0);
}

TEST_CASE("error-fit gradient matches finite differences") {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> nd;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto net = LocalizerNet::init(2, seed);
    const auto batch = LossBatch::from(off_kink_set(net, 8, rng));
    const auto loss = erc_error_fit_loss(net, batch);
    for (int dir = 0; dir < 10; ++dir) {
      Eigen::VectorXd v = Eigen::VectorXd::NullaryExpr(loss.gradient.size(), [&] { return nd(rng); });
      v.normalize();
      const double h = 1e-5;
      auto plus = net, minus = net;
      plus.add_to_params(h * v);
      minus.add_to_params(-h * v);
      const double fd = (erc_error_fit_loss(plus, batch, false).value - erc_error_fit_loss(minus, batch, false).value) / (2 * h);
      CHECK(std::abs(fd - loss.gradient.dot(v)) <= 1e-6 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("single-alpha size equals the evaluated mean size") {
  std::mt19937_64 rng(7);
  const auto cal = random_scored_set(30, 2, rng);
  const auto test = random_scored_set(15, 2, rng);
  const TransformFamily lin(FamilyKind::linear, LocalizerNet::init(2, 2));
  const std::vector<double> alphas{0.1};
  CHECK(single_alpha_size(lin, cal, test, 0.1) == evaluate(lin, cal, test, alphas)[0].mean_size);
  CHECK_THROWS_AS(single_alpha_size(lin, cal, test, 0.001), InvalidArgument);
}
