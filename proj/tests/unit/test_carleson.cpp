#include <doctest.h>

#include <cmath>
#include <numbers>

#include "mltb/carleson.hpp"
#include "mltb/errors.hpp"

using namespace mltb;

namespace {

MeasureSampler constant_density(const GridSpec& g, const ScaleGrid& s, double c) {
  MeasureSampler mu;
  mu.grid = g;
  mu.scales = s;
  mu.density = [c](std::span<const double>, double) { return c; };
  return mu;
}

}  // namespace

TEST_CASE("constant density: tent mass over Q is c ln(l(Q)/t_min)") {
  const GridSpec g = GridSpec::box(1, -4, 4, 1.0 / 32);
  const ScaleGrid s(1.0 / 16, 4.0, 4);
  const std::vector<DyadicCube> family{DyadicCube(0, {0}), DyadicCube(-1, {-2}), DyadicCube(2, {1}),
                                       DyadicCube(3, {-5})};
  const auto rep = carleson_norm(constant_density(g, s, 2.0), family);
  REQUIRE(rep.masses.size() == family.size());
  for (const auto& tm : rep.masses) {
    // the clipped log cells integrate dt/t exactly
    CHECK(tm.normalized_mass == doctest::Approx(2.0 * std::log(tm.cube.side() * 16)).epsilon(1e-12));
  }
  CHECK(rep.witness == DyadicCube(-1, {-2}));
  CHECK(rep.norm == doctest::Approx(2.0 * std::log(32.0)));
}

TEST_CASE("carleson norm domain checks") {
  const GridSpec g = GridSpec::box(1, 0, 4, 1.0 / 8);
  const ScaleGrid s(1.0 / 8, 1.0, 2);
  const std::vector<DyadicCube> tall{DyadicCube(-1, {0})}, outside{DyadicCube(0, {7})};
  CHECK_THROWS_AS(carleson_norm(constant_density(g, s, 1.0), tall), DomainError);
  CHECK_THROWS_AS(carleson_norm(constant_density(g, s, 1.0), outside), DomainError);
  const std::vector<DyadicCube> ok{DyadicCube(0, {1})};
  CHECK_THROWS_AS(carleson_norm(constant_density(g, s, -1.0), ok), DomainError);
}

TEST_CASE("theta carleson: cancelling kernel vanishes, normalized kernel grows by ln 2 per octave") {
  const KernelParams p{2, 1, 2.0, 1.0, 10.0};
  const GridSpec g = GridSpec::box(1, 0, 1, 1.0 / 64);
  const ScaleGrid s(1.0 / 32, 1.0, 4);
  std::vector<DyadicCube> family;
  for (int gen = 0; gen <= 2; ++gen)
    for (const auto& c : descendants(DyadicCube(0, {0}), gen)) family.push_back(c);
  CHECK(theta_carleson(builtin_kernel("cancelling", p), family, g, s).norm < 1e-12);
  const auto norm = theta_carleson(builtin_kernel("normalized", p), family, g, s);
  CHECK(norm.norm == doctest::Approx(std::log(32.0)).epsilon(1e-8));

  // the truncated variant with tau = l(Q) everywhere leaves nothing
  const auto none = theta_carleson(builtin_kernel("normalized", p), family, g, s,
                                   [](std::span<const double>) { return 1.0; });
  CHECK(none.norm == 0.0);

  const auto trend = carleson_divergence(builtin_kernel("normalized", p), DyadicCube(0, {0}), 1.0 / 64, s);
  REQUIRE(trend.increments.size() == trend.masses.size());
  for (double inc : trend.increments) CHECK(inc == doctest::Approx(std::numbers::ln2).epsilon(1e-8));
  CHECK(trend.min_abs_theta == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("level set measure") {
  const GridSpec g = GridSpec::box(1, 0, 1, 1.0 / 16);
  const auto f = SampledFunction::sample(g, [](auto x) { return Complex(x[0], 0.0); });
  CHECK(level_set_measure(f, DyadicCube(0, {0}), 0.5) == 0.5);
  CHECK(level_set_measure(f, DyadicCube(1, {0}), 0.5) == 0.0);
  CHECK(level_set_measure(f, DyadicCube(0, {0}), -1.0) == 1.0);
}

TEST_CASE("carleson embedding") {
  const GridSpec g = GridSpec::box(1, -8, 8, 1.0 / 16);
  const ScaleGrid s(0.25, 2.0, 2);
  const auto f = SampledFunction::sample(g, [](auto x) { return Complex(std::exp(-x[0] * x[0]), 0.0); });
  const auto mu = constant_density(g, s, 1.0);
  const std::vector<DyadicCube> family{DyadicCube(-1, {0})};
  const auto rep = embedding_check(mu, f, 2.0, MollifierSpec{}, family);
  CHECK(rep.ratio > 0.0);
  CHECK(rep.ratio == doctest::Approx(rep.lhs / rep.f_norm));
  CHECK(rep.carleson == doctest::Approx(std::log(8.0)));
  // P_t is a contraction on L^2 so the ratio is at most sqrt(ln(t_max/t_min))
  CHECK(rep.ratio <= std::sqrt(std::log(8.0)) * (1 + 1e-12));
  CHECK_THROWS_AS(embedding_check(mu, SampledFunction::zeros(g), 2.0, MollifierSpec{}), InvalidArgument);
  CHECK_THROWS(embedding_check(mu, SampledFunction::zeros(GridSpec::box(1, 0, 1, 1.0 / 16)), 2.0, MollifierSpec{}));
}

TEST_CASE("paraproduct measure density is |Q_t^2 beta|^2") {
  const GridSpec g = GridSpec::box(1, -8, 8, 1.0 / 32);
  const auto beta = SampledFunction::sample(g, [](auto x) { return Complex(std::abs(x[0]) < 1 ? 1.0 : 0.0, 0.0); });
  const ScaleGrid s(0.25, 1.0, 2);
  const MollifierSpec psi{"mexican_hat"};
  const auto mu = paraproduct_measure(beta, s, psi);
  const auto q2 = lp_projection(lp_projection(beta, s[1], psi), s[1], psi);
  const std::size_t cell = 300;
  const double expect = std::norm(q2[cell]);
  double got;
  if (mu.density_on_grid) {
    got = mu.density_on_grid(1)[cell];
  } else {
    got = mu.density(g.center(cell), s[1]);
  }
  CHECK(got == doctest::Approx(expect).epsilon(1e-10));
}
