#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "sicaoi/numeric.hpp"

using namespace sicaoi;
using Catch::Approx;

TEST_CASE("binomial pmf matches repeated Bernoulli convolution", "[numeric]") {
  const std::size_t n = 50;
  const double b = 0.3;
  std::vector<double> conv = {1.0};
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> next(conv.size() + 1, 0.0);
    for (std::size_t k = 0; k < conv.size(); ++k) {
      next[k] += conv[k] * (1.0 - b);
      next[k + 1] += conv[k] * b;
    }
    conv = next;
  }
  const auto pmf = numeric::binomial_pmf(n, b);
  REQUIRE(pmf.size() == n + 1);
  for (std::size_t k = 0; k <= n; ++k) CHECK(std::abs(pmf[k] - conv[k]) < 1e-12);
}

TEST_CASE("binomial pmf edge cases", "[numeric]") {
  const auto half = numeric::binomial_pmf(2, 0.5);
  CHECK(half[0] == Approx(0.25));
  CHECK(half[1] == Approx(0.5));
  CHECK(half[2] == Approx(0.25));
  const auto zero = numeric::binomial_pmf(7, 0.0);
  CHECK(zero[0] == 1.0);
  const auto one = numeric::binomial_pmf(7, 1.0);
  CHECK(one[7] == 1.0);
  // Large trial counts stay normalized.
  const auto big = numeric::binomial_pmf(10000, 0.37);
  double s = 0.0;
  for (double v : big) s += v;
  CHECK(std::abs(s - 1.0) < 1e-10);
  CHECK_THROWS_AS(numeric::binomial_pmf(3, 1.5), std::invalid_argument);
}

TEST_CASE("bisection and golden section", "[numeric]") {
  const double r = numeric::bisect([](double x) { return x * x - 2.0; }, 0.0, 2.0, 1e-14, 0.0);
  CHECK(r == Approx(std::sqrt(2.0)).epsilon(1e-13));
  CHECK_THROWS_AS(numeric::bisect([](double x) { return x * x + 1.0; }, -1.0, 1.0, 1e-9, 0.0), std::domain_error);
  const double m = numeric::golden_max([](double x) { return -(x - 0.3) * (x - 0.3); }, 0.0, 1.0, 1e-9);
  CHECK(m == Approx(0.3).margin(1e-8));
}

TEST_CASE("adaptive quadrature", "[numeric]") {
  CHECK(numeric::integrate([](double x) { return std::exp(-x); }, 0.0, 30.0, 1e-12) ==
        Approx(1.0 - std::exp(-30.0)).epsilon(1e-11));
  // r^5 grows over six decades; relative accuracy must hold anyway.
  const double R = 700.0;
  CHECK(numeric::integrate([](double r) { return r * r * r * r * r; }, 1.0, R, 1e-10) ==
        Approx((std::pow(R, 6) - 1.0) / 6.0).epsilon(1e-9));
}

TEST_CASE("monotone cubic interpolation", "[numeric]") {
  const std::vector<double> x = {0, 1, 2, 3, 4};
  const std::vector<double> y = {0, 0.1, 0.2, 2.0, 2.05};
  numeric::MonotoneCubic f(x, y);
  double prev = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double v = f(i / 100.0);
    CHECK(v >= prev - 1e-15);
    CHECK(v >= 0.0);
    CHECK(v <= 2.05 + 1e-15);
    prev = v;
  }
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(f(x[i]) == Approx(y[i]));
  CHECK_THROWS_AS(f(4.5), InterpolationRangeError);
  CHECK_THROWS_AS(f(-0.1), InterpolationRangeError);
}

TEST_CASE("least squares recovers an exact line", "[numeric]") {
  const std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y;
  for (double v : x) y.push_back(0.39 * v + 0.78);
  const auto fit = numeric::least_squares(x, y);
  CHECK(fit.slope == Approx(0.39).epsilon(1e-12));
  CHECK(fit.intercept == Approx(0.78).epsilon(1e-12));
  const std::vector<double> one = {1.0};
  CHECK_THROWS(numeric::least_squares(one, one));
}

TEST_CASE("student t critical values", "[numeric]") {
  CHECK(numeric::student_t_critical(0.95, 1) == Approx(12.7062047).epsilon(1e-7));
  CHECK(numeric::student_t_critical(0.95, 9) == Approx(2.2621572).epsilon(1e-7));
  CHECK_THROWS(numeric::student_t_critical(0.95, 0));
}

TEST_CASE("logspace endpoints and spacing", "[numeric]") {
  const auto g = numeric::logspace(1e-3, 31.0, 200);
  REQUIRE(g.size() == 200);
  CHECK(g.front() == 1e-3);
  CHECK(g.back() == 31.0);
  const double ratio = g[1] / g[0];
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] / g[i - 1] == Approx(ratio).epsilon(1e-9));
}
