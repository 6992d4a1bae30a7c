#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "mltb/accretive.hpp"
#include "mltb/errors.hpp"

using namespace mltb;

TEST_CASE("noncompatible system: numerator 1/12 with vanishing slot means") {
  const auto sys = builtin_system("noncompatible", {2, 1, 2.0});
  const auto rep = check_system(sys, DyadicCube(-1, {0}), 1.0 / 1024, 1.0 / 64);
  // avg over [0,2) of (x - 1/2)^2 is 7/12; on [0,1) it is 1/12 while the slot means vanish
  CHECK(rep.a.real() == doctest::Approx(7.0 / 12).epsilon(1e-14));
  CHECK(rep.slot_means[0].real() == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(std::isinf(rep.b3_compat));
  CHECK(rep.b3_witness == DyadicCube(0, {0}));
  CHECK(Rational::from_double(rep.witness_numerator.real()) == Rational(1, 12));
  CHECK_FALSE(rep.pass_b3);
}

TEST_CASE("alternating system: slot means 1/2, product mean 0") {
  testgen::Gen gen(4);
  const auto sys = builtin_system("alternating", {2, 1, 2.0});
  for (int it = 0; it < 5; ++it) {
    const DyadicCube q = gen.cube(1, -2, 2, -3, 3);
    const auto rep = check_system(sys, q, q.side() / 256, q.side() / 16);
    CHECK(rep.slot_means[0].real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(rep.slot_means[1].real() == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(rep.a) < 1e-14);
    CHECK(std::isinf(rep.b2));
    CHECK(rep.b1 == doctest::Approx(1.0));
  }
  CHECK_THROWS_AS(builtin_system("alternating", {3, 1, 2.0}), InvalidArgument);
  CHECK_THROWS_AS(builtin_system("alternating", {2, 2, 2.0}), InvalidArgument);
}

TEST_CASE("characteristic system is ideal") {
  const auto sys = builtin_system("characteristic", {3, 2, 2.0});
  const auto rep = check_system(sys, DyadicCube(0, {0, 0}), 1.0 / 16, 1.0 / 4, {1.0, 1.0, 1.0});
  CHECK(rep.pass());
  CHECK(rep.b2 == doctest::Approx(1.0));
  CHECK(rep.b3_compat == doctest::Approx(1.0));
  CHECK(rep.q_slots == std::vector<double>{6.0, 6.0, 6.0});
  CHECK(rep.q == Rational(2));
  CHECK(rep.cubes_checked == 1 + 4 + 16);
}

TEST_CASE("property: subcube table agrees with direct averages, serial equals parallel") {
  testgen::Gen gen(77);
  for (int it = 0; it < 6; ++it) {
    const int n = gen.integer(1, 2);
    const DyadicCube root = gen.cube(n, 0, 0, -1, 1);
    const double h = n == 1 ? 1.0 / 64 : 1.0 / 8;
    const GridSpec g = GridSpec::over(root, h);
    std::vector<PseudoAccretiveSystem> sys;
    std::vector<SampledFunction> fs;
    for (int i = 0; i < 2; ++i) {
      fs.push_back(gen.function(g));
      sys.push_back(system_from_functions(i, 4.0, {{root, fs.back()}}));
    }
    const SubcubeTable a(sys, root, h, Exec::serial), b(sys, root, h, Exec::parallel);
    const auto prod = fs[0] * fs[1];
    for (int d = 0; d <= a.depth(); d += 2) {
      for (const auto& r : descendants(root, d)) {
        CHECK(a.product_average(r) == b.product_average(r));
        CHECK(std::abs(a.product_average(r) - average(prod, r)) < 1e-13);
        CHECK(std::abs(a.slot_average(1, r) - average(fs[1], r)) < 1e-13);
      }
    }
    double p = 0.0;
    for (std::size_t i = 0; i < fs[0].size(); ++i) p += std::pow(std::abs(fs[0][i]), 4.0);
    CHECK(a.power_average(0) == doctest::Approx(p / fs[0].size()).epsilon(1e-12));
    CHECK_THROWS(a.product_average(root.parent()));
  }
}

TEST_CASE("property: the cancellation functional scales with |c|^q") {
  const auto k = builtin_kernel("gaussian", {2, 1, 2.0, 1.0, 10.0});
  const DyadicCube q(0, {0});
  const double h = 1.0 / 64;
  const GridSpec g = GridSpec::box(1, -2, 3, h);
  testgen::Gen gen(9);
  const ScaleGrid scales(1.0 / 16, 1.0, 2);
  const auto f = SampledFunction::sample(g, [](auto x) { return Complex(x[0] >= 0 && x[0] < 1 ? 1.0 : 0.0, 0.0); });
  for (int it = 0; it < 3; ++it) {
    const double c = gen.uniform(0.5, 3);
    const std::vector<PseudoAccretiveSystem> base{system_from_functions(0, 4, {{q, f}}),
                                                  system_from_functions(1, 4, {{q, f}})};
    const std::vector<PseudoAccretiveSystem> scaled{system_from_functions(0, 4, {{q, f.scaled(c)}}),
                                                    system_from_functions(1, 4, {{q, f}})};
    const auto r0 = check_theta_cancel(k, base, q, 2.0, scales, h);
    const auto r1 = check_theta_cancel(k, scaled, q, 2.0, scales, h);
    CHECK(r0.value > 0.0);
    CHECK(r1.value == doctest::Approx(c * c * r0.value).epsilon(1e-12));
  }
  // a mean-zero kernel against the constant slot contributes nothing deep inside
  const auto cancel = builtin_kernel("cancelling", {2, 1, 2.0, 1.0, 10.0});
  const auto sys = builtin_system("characteristic", {2, 1, 2.0});
  const auto big = check_theta_cancel(cancel, sys, DyadicCube(-3, {0}), 2.0, ScaleGrid(1.0 / 8, 0.5, 2), 1.0 / 32);
  CHECK(big.value < 0.05);
}
