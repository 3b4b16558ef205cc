#include "helpers.hpp"

#include "lacp/conformal.hpp"
#include "lacp/error.hpp"
#include "lacp/synthetic.hpp"

#include <doctest.h>

#include <algorithm>

using namespace lacp;
using namespace lacp::testing;

TEST_CASE("base score") {
  CHECK(base_score(2, 0) == 4);
  CHECK(base_score(1.5, 1.5) == 0);
  CHECK(base_score(-1, 1) == 4);
}

TEST_CASE("quantile index") {
  CHECK(quantile_index(3, 0.5) == 2);
  CHECK(quantile_index(99, 0.05) == 95);
  CHECK(quantile_index(99, 0.1) == 90);
  CHECK(quantile_index(99, 0.32) == 68);
  CHECK(quantile_index(10, 1.0) == 1);
  CHECK(quantile_index(10, 1.0 / 11.0) == 10);
  CHECK_THROWS_WITH_AS(quantile_index(10, 0.01), doctest::Contains("(N+1)-th order statistic"), InvalidArgument);
  CHECK_THROWS_AS(quantile_index(0, 0.5), InvalidArgument);
}

TEST_CASE("calibrate picks the order statistic") {
  const double r2 = std::sqrt(2.0), r3 = std::sqrt(3.0);
  const std::vector<double> plus{2.0, r2 + 2.0, r3 + 3.0};
  const std::vector<double> minus{0.0, r2 - 2.0, r3 - 3.0};
  CHECK(calibrate(plus, 0.5) == r2 + 2.0);
  CHECK(calibrate(minus, 0.5) == r2 - 2.0);
  const std::vector<double> one{4.2};
  CHECK(calibrate(one, 0.5) == 4.2);
  CHECK_THROWS_AS(calibrate(std::span<const double>{}, 0.5), InvalidArgument);
}

TEST_CASE("calibrate breaks ties by index and covers exactly m* distinct scores") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  for (std::size_t n : {5, 19, 99, 250}) {
    std::vector<double> b(n);
    for (auto& v : b) v = nd(rng);
    for (double alpha : {0.05, 0.1, 0.32, 0.5}) {
      if (alpha < 1.0 / static_cast<double>(n + 1)) continue;
      const double q = calibrate(b, alpha);
      CHECK(static_cast<std::size_t>(std::count_if(b.begin(), b.end(), [&](double v) { return v <= q; })) ==
            quantile_index(n, alpha));
    }
  }
  const std::vector<double> tied{1.0, 1.0, 1.0, 0.0};
  CHECK(calibrate(tied, 0.5) == 1.0);
}

TEST_CASE("worked example: attribute-dependent maps change the interval size") {
  const double r2 = std::sqrt(2.0);
  const double a[3] = {1, 2, 3}, xs[3] = {1, 2, 3};
  const double x_test = 0.0;
  for (double theta : {1.0, -1.0}) {
    const auto fam = shifted_root(theta);
    std::vector<double> b;
    for (int i = 0; i < 3; ++i) b.push_back(fam.forward(std::span(&xs[i], 1), a[i]));
    const double q = calibrate(b, 0.5);
    const auto iv = interval(fam, std::span(&x_test, 1), 0.0, q);
    const double expected = theta > 0 ? 2.0 * (2.0 + r2) : 2.0 * (2.0 - r2);
    CHECK(std::abs(iv.size() - expected) <= 1e-12);
    CHECK(std::abs(q - (theta > 0 ? r2 + 2.0 : r2 - 2.0)) <= 1e-12);
  }
}

TEST_CASE("interval of the fixed family") {
  const double x = 0.0;
  const auto iv = interval(TransformFamily::fixed(), std::span(&x, 1), 0.0, 9.0);
  CHECK(iv.lower() == -3.0);
  CHECK(iv.upper() == 3.0);
  CHECK(iv.contains(3.0));
  CHECK_FALSE(iv.contains(3.0001));
}

TEST_CASE("evaluate: exact predictions give full validity") {
  std::mt19937_64 rng(4);
  auto cal = random_scored_set(30, 2, rng);
  auto test = random_scored_set(20, 2, rng);
  test.prediction = test.y;
  test.score.setZero();
  const std::vector<double> alphas{0.05, 0.5};
  const TransformFamily linear(FamilyKind::linear, LocalizerNet::init(2, 1));
  for (const auto& rep : evaluate(linear, cal, test, alphas)) CHECK(rep.validity == 1.0);
}

TEST_CASE("evaluate reports an inadmissible alpha per level instead of failing") {
  std::mt19937_64 rng(4);
  const auto cal = random_scored_set(10, 1, rng);
  const auto test = random_scored_set(5, 1, rng);
  const std::vector<double> alphas{0.01, 0.5};
  const auto reps = evaluate(TransformFamily::fixed(), cal, test, alphas);
  REQUIRE(reps.size() == 2);
  CHECK_FALSE(reps[0].ok());
  CHECK(reps[1].ok());
}

TEST_CASE("fixed and linear with a constant localizer give identical reports") {
  std::mt19937_64 rng(7);
  const auto cal = random_scored_set(80, 2, rng);
  const auto test = random_scored_set(40, 2, rng);
  LocalizerNet zero(LocalizerNet::default_layout(2));
  zero.bias(zero.num_layers() - 1)[0] = 0.37;
  const TransformFamily linear(FamilyKind::linear, zero);
  const std::vector<double> alphas{0.05, 0.1, 0.32};
  const auto a = evaluate(TransformFamily::fixed(), cal, test, alphas);
  const auto b = evaluate(linear, cal, test, alphas);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].mean_size == doctest::Approx(b[i].mean_size).epsilon(1e-12));
    CHECK(a[i].validity == b[i].validity);
  }
}

TEST_CASE("fixed family coverage on heteroskedastic data is near nominal") {
  // Monte Carlo over 300 resamples of (calibration, test point).
  const std::size_t reps = 300, n_cal = 19;
  const double alpha = 0.1;
  const auto pool = generate({NoiseKind::cos, 20000, 0.1, 17});
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::size_t> pick(0, pool.data.size() - 1);
  std::size_t covered = 0;
  for (std::size_t r = 0; r < reps; ++r) {
    std::vector<double> b;
    for (std::size_t i = 0; i < n_cal; ++i) {
      const auto s = pool.data.sample(pick(rng));
      b.push_back(base_score(0.0, s.y));
    }
    const auto t = pool.data.sample(pick(rng));
    const double q = calibrate(b, alpha);
    covered += interval(TransformFamily::fixed(), t.x, 0.0, q).contains(t.y);
  }
  const double p = static_cast<double>(quantile_index(n_cal, alpha)) / static_cast<double>(n_cal + 1);
  const double freq = static_cast<double>(covered) / static_cast<double>(reps);
  CHECK(std::abs(freq - p) <= 3.0 * std::sqrt(p * (1 - p) / static_cast<double>(reps)));
}

TEST_CASE("predict_intervals agrees with interval") {
  std::mt19937_64 rng(9);
  const auto cal = random_scored_set(40, 2, rng);
  const auto test = random_scored_set(10, 2, rng);
  const TransformFamily exp(FamilyKind::exp, LocalizerNet::init(2, 3));
  const auto ivs = predict_intervals(exp, cal, test.x, test.prediction, 0.1);
  const double q = calibrate(calibration_records(exp, cal), 0.1);
  for (std::size_t i = 0; i < test.size(); ++i) {
    CHECK(ivs[i].half_width == doctest::Approx(interval(exp, test.row(i), 0.0, q).half_width).epsilon(1e-14));
  }
}
