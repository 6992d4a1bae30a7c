#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "mltb/errors.hpp"
#include "mltb/paraproduct.hpp"

using namespace mltb;

namespace {

const GridSpec kGrid = GridSpec::box(1, -16, 16, 1.0 / 16);

SampledFunction bump(double c, double r) {
  return SampledFunction::sample(kGrid, [=](auto x) {
    const double u = (x[0] - c) / r;
    return Complex(std::abs(u) < 1 ? std::pow(1 - u * u, 2) : 0.0, 0.0);
  });
}

Paraproduct make(const SampledFunction& beta, int m = 2) {
  return Paraproduct(beta, m, ScaleGrid(0.25, 2.0, 4), MollifierSpec{"mexican_hat"}, MollifierSpec{"bump4"});
}

}  // namespace

TEST_CASE("construction") {
  const auto p = make(bump(0, 2));
  CHECK(p.calderon_constant() == doctest::Approx(13.199).epsilon(1e-4));
  CHECK(p.psi().amplitude == doctest::Approx(std::cbrt(1.0 / p.calderon_constant())));
  CHECK_THROWS_AS(Paraproduct(bump(0, 2), 2, ScaleGrid(0.25, 2.0, 4), MollifierSpec{"mexican_hat"},
                              MollifierSpec{"mexican_hat"}),
                  InvalidArgument);
  CHECK_THROWS_AS(Paraproduct(bump(0, 2), 2, ScaleGrid(0.25, 2.0, 4), MollifierSpec{"bump4"}, MollifierSpec{}),
                  InvalidArgument);
}

TEST_CASE("beta = 0 gives the zero operator") {
  const auto p = make(SampledFunction::zeros(kGrid));
  const std::vector<SampledFunction> f{bump(1, 1), bump(-1, 3)};
  CHECK(p.eval(f).max_abs() == 0.0);
  const double x = 0.0, ys[2] = {1.0, 2.0};
  CHECK(p.kernel(std::span(&x, 1), ys) == 0.0);
}

TEST_CASE("property: eval and the duality form agree to rounding") {
  testgen::Gen gen(19);
  const auto p = make(bump(0.5, 3));
  for (int it = 0; it < 4; ++it) {
    const std::vector<SampledFunction> f{bump(gen.uniform(-3, 3), gen.uniform(1, 4)),
                                         bump(gen.uniform(-3, 3), gen.uniform(1, 4))};
    const auto g = bump(gen.uniform(-3, 3), gen.uniform(0.5, 2));
    const Complex a = pairing(p.eval(f), g);
    const Complex b = p.pairing_by_duality(f, g);
    CHECK(std::abs(a - b) <= 1e-13 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("property: the operator is multilinear") {
  testgen::Gen gen(20);
  const auto p = make(bump(0, 2));
  const auto a = bump(1, 2), b = bump(-2, 1), c = bump(0, 4);
  const double s = gen.uniform(-2, 2);
  const std::vector<SampledFunction> lin{a + b.scaled(s), c}, fa{a, c}, fb{b, c};
  const auto l = p.eval(lin), ra = p.eval(fa), rb = p.eval(fb);
  CHECK(lp_norm(l - (ra + rb.scaled(s)), kInfinity) < 1e-13);
}

TEST_CASE("kernel symmetry and the diagonal") {
  const auto p = make(bump(0, 2));
  testgen::Gen gen(2);
  for (int it = 0; it < 20; ++it) {
    const double x = gen.uniform(-2, 2);
    const double ys[2] = {gen.uniform(-2, 2), gen.uniform(-2, 2)}, sw[2] = {ys[1], ys[0]};
    const double k1 = p.kernel(std::span(&x, 1), ys), k2 = p.kernel(std::span(&x, 1), sw);
    CHECK(k1 == doctest::Approx(k2).epsilon(1e-12));
  }
  const double x = 0.5, diag[2] = {0.5, 0.5};
  CHECK_THROWS_AS(p.kernel(std::span(&x, 1), diag), DomainError);
}

TEST_CASE("cancellation: transposes kill constants") {
  const auto p = make(bump(0, 2));
  const auto phi = bump(1, 1);
  const auto rep = test_cancellation(p, phi);
  REQUIRE(rep.transpose_residuals.size() == 2);
  for (double r : rep.transpose_residuals) CHECK(r <= 1e-12 * rep.transpose_scale);
  CHECK(rep.phi_mean_correction > 0.0);
  CHECK(std::isfinite(rep.relative_error));
}

TEST_CASE("cz sweep reports finite constants and honours the budget") {
  const auto p = make(bump(0, 2));
  const double c = 0.0;
  const auto rep = cz_sweep(p, std::span(&c, 1), 0.5, 8.0, 30, 1.0, 1e6, 5);
  CHECK(rep.samples == 30);
  CHECK(rep.pass);
  CHECK(rep.size_constant > 0.0);
  CHECK(rep.witness_size.size() == 3);
  const auto tight = cz_sweep(p, std::span(&c, 1), 0.5, 8.0, 30, 1.0, rep.size_constant / 2, 5);
  CHECK_FALSE(tight.pass);
  CHECK_THROWS_AS(cz_sweep(p, std::span(&c, 1), 2.0, 1.0, 30, 1.0, 1.0, 5), InvalidArgument);
}
