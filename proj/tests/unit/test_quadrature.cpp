#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mltb/errors.hpp"
#include "mltb/quadrature.hpp"

using namespace mltb;

TEST_CASE("gauss-legendre integrates polynomials of degree 2k-1 exactly") {
  for (int k : {1, 2, 5, 16, 64}) {
    const auto& r = gauss_legendre(k);
    REQUIRE(r.nodes.size() == static_cast<std::size_t>(k));
    for (int d = 0; d <= 2 * k - 1 && d <= 30; ++d) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += r.weights[i] * std::pow(r.nodes[i], d);
      const double exact = d % 2 ? 0.0 : 2.0 / (d + 1);
      CHECK(s == doctest::Approx(exact).epsilon(1e-13).scale(1.0));
    }
  }
  CHECK_THROWS_AS(gauss_legendre(0), InvalidArgument);
  CHECK_THROWS_AS(gauss_legendre(65), InvalidArgument);
}

TEST_CASE("scale grid nodes and weights") {
  const ScaleGrid s(0.25, 4.0, 2);
  REQUIRE(s.size() == 8);
  CHECK(s[0] == doctest::Approx(0.25 * std::sqrt(std::sqrt(2.0))));
  CHECK(s.weight() == doctest::Approx(std::numbers::ln2 / 2));
  // midpoint rule on dt/t is exact for constants: total ln(16)
  CHECK(s.weight() * s.size() == doctest::Approx(std::log(16.0)));
  const auto w = s.within(0.5, 1.0);
  REQUIRE(w.size() == 2);
  CHECK(w[0] == 2);
  CHECK(s.shifted(1)[0] == doctest::Approx(2 * s[0]));
  CHECK_THROWS_AS(ScaleGrid(1.0, 3.0, 1), InvalidArgument);
  CHECK_THROWS_AS(ScaleGrid(1.0, 0.5, 1), InvalidArgument);
  CHECK_THROWS_AS(ScaleGrid(1.0, 2.0, 0), InvalidArgument);
}

TEST_CASE("log-midpoint rule on t^a converges at second order") {
  // int_1^2 t^2 dt/t = 3/2
  double prev = 0.0;
  for (int k : {4, 8, 16}) {
    const ScaleGrid s(1.0, 2.0, k);
    double sum = 0.0;
    for (double t : s.scales()) sum += t * t * s.weight();
    const double err = std::abs(sum - 1.5);
    if (prev > 0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.02));
    prev = err;
  }
}

TEST_CASE("rationals") {
  CHECK(Rational(6, -4) == Rational(-3, 2));
  CHECK(Rational::from_double(1.0 / 3) == Rational(1, 3));
  CHECK(Rational::from_double(0.75) == Rational(3, 4));
  CHECK((Rational(1, 3) + Rational(1, 6)) == Rational(1, 2));
  CHECK(Rational(2, 5).reciprocal() == Rational(5, 2));
  CHECK(Rational(-7, 3).str() == "-7/3");
  CHECK_THROWS_AS(Rational::from_double(1.0 / 1000003), InvalidArgument);
  CHECK_THROWS_AS(Rational(1, 0), InvalidArgument);
}

TEST_CASE("index tuples") {
  const auto t = IndexTuple::make(1.0, {2.0, 2.0});
  CHECK(t.m() == 2);
  CHECK(t.target() == 1.0);
  CHECK(IndexTuple::make(2.0, {4.0, 4.0}).slot(1) == 4.0);
  CHECK(IndexTuple::make(0.5, {1.5, 1.5, 1.5}).p == Rational(1, 2));
  CHECK_THROWS_AS(IndexTuple::make(2.0, {2.0, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(IndexTuple::make(1.0, {1.0, 1e300}), InvalidArgument);
  CHECK(harmonic_combination({2.0, 2.0}) == Rational(1));
  CHECK(harmonic_combination({4.0, 4.0, 4.0}) == Rational(4, 3));
}
