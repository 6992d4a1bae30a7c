#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "mltb/errors.hpp"
#include "mltb/stopping.hpp"

using namespace mltb;

namespace {

bool criterion(const SubcubeTable& t, const DyadicCube& r, Complex a) {
  return (t.product_average(r) / a).real() <= 0.5;
}

std::vector<PseudoAccretiveSystem> random_system(testgen::Gen& gen, const DyadicCube& root, double h) {
  const GridSpec g = GridSpec::over(root, h);
  std::vector<PseudoAccretiveSystem> sys;
  for (int i = 0; i < 2; ++i) {
    std::vector<Complex> v(g.size());
    // mostly positive with dips, so the average is safely away from zero
    for (auto& z : v) z = gen.coin(0.7) ? Complex(1.0 + gen.unit(), 0.3 * gen.uniform(-1, 1)) : Complex(gen.uniform(-1, 0.2), 0);
    sys.push_back(system_from_functions(i, 4.0, {{root, SampledFunction(g, v)}}));
  }
  return sys;
}

}  // namespace

TEST_CASE("characteristic system: nothing selected, E is all of Q") {
  const auto sys = builtin_system("characteristic", {2, 1, 2.0});
  const DyadicCube q(0, {0});
  const auto d = decompose(sys, q, 1.0 / 64, 1.0 / 16);
  CHECK(d.selected.empty());
  CHECK(d.floor_leaves == 16);
  CHECK(d.exceptional_measure == 1.0);
  const double x = 0.4;
  CHECK(d.tau(std::span(&x, 1)) == 0.0);
  // B1 = 1, q = 2 so q' = 2: eta = (1/2)^2
  CHECK(d.eta_nominal() == doctest::Approx(0.25));
}

TEST_CASE("half indicator in one slot: the right half is selected") {
  const DyadicCube q(0, {0});
  const double h = 1.0 / 64;
  const auto f = SampledFunction::sample(GridSpec::over(q, h), [](auto x) { return Complex(x[0] < 0.5 ? 1.0 : 0.0, 0.0); });
  const std::vector<PseudoAccretiveSystem> sys{system_from_functions(0, 2.0, {{q, f}})};
  const auto d = decompose(sys, q, h, 1.0 / 16);
  REQUIRE(d.selected.size() == 1);
  CHECK(d.selected[0] == DyadicCube(1, {1}));
  CHECK(d.exceptional_measure == 0.5);
  const double x = 0.7, y = 0.2;
  CHECK(d.tau(std::span(&x, 1)) == 0.5);
  CHECK(d.tau(std::span(&y, 1)) == 0.0);
}

TEST_CASE("decompose input checks") {
  const DyadicCube q(0, {0});
  CHECK_THROWS_AS(decompose(builtin_system("alternating", {2, 1, 2.0}), q, 1.0 / 64, 1.0 / 16), DomainError);
  CHECK_THROWS_AS(decompose(builtin_system("characteristic", {2, 1, 2.0}), q, 1.0 / 64, 0.3), AlignmentError);
  CHECK_THROWS_AS(decompose(builtin_system("characteristic", {2, 1, 2.0}), q, 1.0 / 64, 1.0), AlignmentError);
}

TEST_CASE("property: stopping cubes are maximal, disjoint and account for |Q|") {
  testgen::Gen gen(31);
  for (int it = 0; it < 15; ++it) {
    const DyadicCube q = gen.cube(1, -1, 1, -2, 2);
    const double h = q.side() / 128, floor = q.side() / 32;
    const auto sys = random_system(gen, q, h);
    const SubcubeTable table(sys, q, h);
    const auto d = decompose(table, floor);
    double covered = 0.0;
    for (std::size_t i = 0; i < d.selected.size(); ++i) {
      const auto& r = d.selected[i];
      CHECK(q.contains(r));
      CHECK(r != q);
      CHECK(r.side() >= floor);
      CHECK(criterion(table, r, d.a));
      for (DyadicCube p = r.parent(); p.generation > q.generation; p = p.parent())
        CHECK_FALSE(criterion(table, p, d.a));
      for (std::size_t j = i + 1; j < d.selected.size(); ++j) CHECK_FALSE(overlaps(r, d.selected[j]));
      covered += r.measure();
    }
    CHECK(covered + d.exceptional_measure == doctest::Approx(q.measure()).epsilon(1e-14));
    // every floor cube outside the selection fails the criterion
    std::size_t leaves = 0;
    for (const auto& c : descendants(q, 5)) {
      bool in = false;
      for (const auto& r : d.selected) in = in || r.contains(c);
      if (!in) {
        ++leaves;
        CHECK_FALSE(criterion(table, c, d.a));
      }
    }
    CHECK(leaves == d.floor_leaves);
    // finer floors only shrink E
    const auto finer = decompose(table, floor / 4);
    CHECK(finer.exceptional_measure <= d.exceptional_measure);
    // eta as defined
    const double qp = d.q / (d.q - 1);
    CHECK(d.eta_nominal() == doctest::Approx(std::pow(2 * std::pow(std::max(d.b1, 1.0), d.m), -qp)));
  }
}

TEST_CASE("property: lower bound holds off the stopping region") {
  testgen::Gen gen(8);
  for (int it = 0; it < 5; ++it) {
    const DyadicCube q(0, {0});
    const double h = 1.0 / 256;
    const auto sys = random_system(gen, q, h);
    const SubcubeTable table(sys, q, h);
    const auto d = decompose(table, 1.0 / 32);
    const auto rep = check_system(sys, q, h, 1.0 / 32);
    const auto samples = lower_bound_sweep(d, 500, 11 + it);
    REQUIRE(samples.size() == 500);
    for (const auto& s : samples) CHECK(s.t > d.tau(s.x));
    const auto lb = verify_lower_bound(d, table, rep.b2, rep.b3_compat, samples);
    CHECK(lb.violations_weak == 0);
    CHECK(lb.min_product >= lb.bound_weak);
    CHECK(lb.bound_strong >= lb.bound_weak);
    // deterministic
    CHECK(lower_bound_sweep(d, 500, 11 + it)[17].t == samples[17].t);
  }
}

TEST_CASE("lower bound rejects samples inside the stopping region") {
  const DyadicCube q(0, {0});
  const double h = 1.0 / 64;
  const auto f = SampledFunction::sample(GridSpec::over(q, h), [](auto x) { return Complex(x[0] < 0.5 ? 1.0 : 0.0, 0.0); });
  const std::vector<PseudoAccretiveSystem> sys{system_from_functions(0, 2.0, {{q, f}})};
  const SubcubeTable table(sys, q, h);
  const auto d = decompose(table, 1.0 / 16);
  const std::vector<LowerBoundSample> bad{{{0.7}, 0.25}};
  CHECK_THROWS_AS(verify_lower_bound(d, table, 2.0, 1.0, bad), InvalidArgument);
}
