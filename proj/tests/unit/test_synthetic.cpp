#include "lacp/error.hpp"
#include "lacp/synthetic.hpp"

#include <doctest.h>

#include <cmath>

using namespace lacp;

TEST_CASE("amplitude values") {
  CHECK(amplitude(NoiseKind::cos, 0.0) == doctest::Approx(2.1).epsilon(1e-15));
  CHECK(amplitude(NoiseKind::squared, 0.0) == 0.1);
  // Value from a separate calculator run: 0.1 + 2 / 1.1.
  CHECK(amplitude(NoiseKind::inverse, 1.0) == doctest::Approx(1.9181818181818182).epsilon(1e-15));
  CHECK(amplitude(NoiseKind::linear, 0.0) == doctest::Approx(2.1).epsilon(1e-15));
  CHECK(amplitude(NoiseKind::linear, 0.6) == 0.1);
  CHECK(amplitude(NoiseKind::linear, -0.2) == doctest::Approx(0.1 + 1.8).epsilon(1e-15));
}

TEST_CASE("indicator boundaries are strict") {
  for (auto kind : {NoiseKind::cos, NoiseKind::squared, NoiseKind::inverse, NoiseKind::linear}) {
    CHECK(amplitude(kind, 0.5) == 0.1);
    CHECK(amplitude(kind, -0.5) == 0.1);
  }
  CHECK(amplitude(NoiseKind::squared, 0.75) == doctest::Approx(0.1 + 2 * 0.5625));
  CHECK(amplitude(NoiseKind::cos, 0.25, 0.3) == doctest::Approx(0.3 + 2 * std::cos(M_PI * 0.125)));
}

TEST_CASE("noise kind names") {
  for (auto kind : {NoiseKind::cos, NoiseKind::squared, NoiseKind::inverse, NoiseKind::linear}) {
    CHECK(noise_from_string(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(noise_from_string("bogus"), InvalidArgument);
}

TEST_CASE("generate: shape, normalization and determinism") {
  const auto a = generate({NoiseKind::linear, 500, 0.1, 42});
  const auto b = generate({NoiseKind::linear, 500, 0.1, 42});
  const auto c = generate({NoiseKind::linear, 500, 0.1, 43});
  CHECK(a.data.size() == 500);
  CHECK(a.data.dim() == 3);
  CHECK(a.data.x() == b.data.x());
  CHECK(a.data.y() == b.data.y());
  CHECK(a.data.y() != c.data.y());
  CHECK(a.attribute_stats[0].zero_variance());
  for (Eigen::Index i = 0; i < 500; ++i) CHECK(a.data.x()(i, 0) == 0.0);
  for (Eigen::Index j = 1; j < 3; ++j) {
    CHECK(std::abs(a.data.x().col(j).mean()) < 1e-12);
    const double var = (a.data.x().col(j).array() - a.data.x().col(j).mean()).square().mean();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  }
  for (std::size_t i = 0; i < 500; ++i) {
    CHECK(a.raw_x[i] >= -1.0);
    CHECK(a.raw_x[i] <= 1.0);
    const auto attrs = a.attributes_at(a.raw_x[i]);
    for (std::size_t j = 0; j < 3; ++j) CHECK(attrs[j] == doctest::Approx(a.data.row(i)[j]).epsilon(1e-12));
  }
  CHECK_THROWS_AS(generate({NoiseKind::cos, 0, 0.1, 1}), InvalidArgument);
  CHECK_THROWS_AS(generate({NoiseKind::cos, 10, 0.0, 1}), InvalidArgument);
}

TEST_CASE("binned conditional mean follows the polynomial") {
  const auto s = generate({NoiseKind::squared, 20000, 0.1, 5});
  const int bins = 20;
  std::vector<double> sum(bins), mean_sum(bins), sq(bins);
  std::vector<int> count(bins);
  for (std::size_t i = 0; i < s.data.size(); ++i) {
    const double x = s.raw_x[i];
    const int b = std::min(bins - 1, static_cast<int>((x + 1.0) / 2.0 * bins));
    const double resid = s.data.y()[static_cast<Eigen::Index>(i)] - s.mean_at(x);
    sum[b] += resid;
    sq[b] += resid * resid;
    ++count[b];
  }
  for (int b = 0; b < bins; ++b) {
    REQUIRE(count[b] >= 200);
    const double m = sum[b] / count[b];
    const double sd = std::sqrt(sq[b] / count[b] - m * m);
    CHECK(std::abs(m) <= 3.0 * sd / std::sqrt(static_cast<double>(count[b])));
  }
}
