#include <doctest.h>

#include <cmath>
#include <set>

#include "gen.hpp"
#include "mltb/dyadic.hpp"
#include "mltb/errors.hpp"

using namespace mltb;

namespace {
DyadicCube c1(int g, std::int64_t k) { return DyadicCube(g, {k}); }
}  // namespace

TEST_CASE("cube geometry is exact") {
  const DyadicCube q(3, {5, -2});
  CHECK(q.side() == 0.125);
  CHECK(q.measure() == 0.125 * 0.125);
  CHECK(q.lower(0) == 0.625);
  CHECK(q.upper(1) == -0.125);
  CHECK(q.parent() == DyadicCube(2, {2, -1}));
  CHECK(q.ancestor(0) == DyadicCube(0, {0, -1}));
  CHECK(c1(-2, 1).side() == 4.0);
}

TEST_CASE("children partition the parent") {
  const DyadicCube q(1, {1, 0});
  const auto ch = q.children();
  REQUIRE(ch.size() == 4);
  double total = 0.0;
  for (const auto& c : ch) {
    CHECK(q.contains(c));
    CHECK(c.parent() == q);
    total += c.measure();
  }
  CHECK(total == q.measure());
  for (std::size_t i = 0; i < ch.size(); ++i)
    for (std::size_t j = i + 1; j < ch.size(); ++j) CHECK_FALSE(overlaps(ch[i], ch[j]));
  // lexicographic, first axis most significant
  CHECK(ch[1] == DyadicCube(2, {2, 1}));
  CHECK(ch[2] == DyadicCube(2, {3, 0}));
}

TEST_CASE("smallest_containing examples") {
  const double a = 0.3, b = -0.1;
  // the rule (smallest side > t) selects [0, 1/2) here
  CHECK(smallest_containing(std::span(&a, 1), 0.4) == c1(1, 0));
  CHECK(smallest_containing(std::span(&a, 1), 1.0) == c1(-1, 0));
  CHECK(smallest_containing(std::span(&b, 1), 0.2) == c1(2, -1));
  CHECK(generation_above(0.5) == 0);
  CHECK(generation_above(0.49) == 1);
}

TEST_CASE("smallest_containing rejects generations outside the range") {
  const double x = 0.0;
  CHECK_THROWS_AS(smallest_containing(std::span(&x, 1), 1e30), InvalidArgument);
  CHECK_THROWS_AS(smallest_containing(std::span(&x, 1), 1e-30), InvalidArgument);
}

TEST_CASE("property: Q(x,t) contains x, has side in (t, 2t], and nests") {
  testgen::Gen g(11);
  for (int it = 0; it < 2000; ++it) {
    const int n = g.integer(1, 3);
    std::vector<double> x(n);
    for (auto& c : x) c = g.uniform(-50, 50);
    const double t = std::exp2(g.uniform(-20, 10));
    const DyadicCube q = smallest_containing(x, t);
    CHECK(q.contains(x));
    CHECK(q.side() > t);
    CHECK(q.side() / 2 <= t);
    const double t2 = t * std::exp2(g.uniform(0, 5));
    CHECK(smallest_containing(x, t2).contains(q));
  }
}

TEST_CASE("subcubes enumeration") {
  const auto s = subcubes(c1(0, 0), 1);
  REQUIRE(s.size() == 3);
  CHECK(s[0] == c1(0, 0));
  CHECK(s[1] == c1(1, 0));
  CHECK(s[2] == c1(1, 1));
  CHECK(subcubes(DyadicCube(0, {0, 0}), 1).size() == 5);
  CHECK(subcubes(c1(0, 0), 10).size() == 2047);
  CHECK(subcube_count(1, 10) == 2047);
  CHECK(descendants(DyadicCube(0, {0, 0}), 2).size() == 16);
  CHECK_THROWS_AS(subcubes(c1(0, 0), 10, 100), ResourceError);
}

TEST_CASE("property: same-generation cubes are equal or disjoint") {
  testgen::Gen g(5);
  for (int it = 0; it < 1000; ++it) {
    const auto a = g.cube(2, 3, 3, -3, 3);
    const auto b = g.cube(2, 3, 3, -3, 3);
    CHECK((a == b) == overlaps(a, b));
  }
}

TEST_CASE("tents") {
  const Tent t{c1(1, 1)};
  const double x = 0.7;
  CHECK(t.height() == 0.5);
  CHECK(t.contains(std::span(&x, 1), 0.5));
  CHECK_FALSE(t.contains(std::span(&x, 1), 0.51));
  CHECK_FALSE(t.contains(std::span(&x, 1), 0.0));
}

namespace {

CellMask interval_mask(int level, std::int64_t cells, std::vector<std::pair<double, double>> parts) {
  CellMask m;
  m.level = level;
  m.origin = {0};
  m.cells = {cells};
  m.inside.assign(cells, 0);
  const double h = std::ldexp(1.0, -level);
  for (std::int64_t j = 0; j < cells; ++j) {
    const double c = (j + 0.5) * h;
    for (auto [lo, hi] : parts) if (c > lo && c < hi) m.inside[j] = 1;
  }
  return m;
}

}  // namespace

TEST_CASE("whitney: empty set and a single interval") {
  CellMask empty = interval_mask(6, 256, {});
  CHECK(whitney(empty).cubes.empty());

  // Omega = (1, 2) inside a window [0, 4)
  const CellMask m = interval_mask(6, 256, {{1.0, 2.0}});
  const auto w = whitney(m);
  CHECK_FALSE(w.cubes.empty());
  const WhitneyCheck chk = check_whitney(m, w.cubes);
  CHECK(chk.ok());
  CHECK(chk.max_touching <= 12);
}

TEST_CASE("whitney: two components stay separate") {
  const CellMask m = interval_mask(6, 256, {{0.5, 1.5}, {2.5, 3.5}});
  const auto w = whitney(m);
  CHECK(check_whitney(m, w.cubes).ok());
  for (const auto& q : w.cubes) {
    const bool left = q.upper(0) <= 1.5, right = q.lower(0) >= 2.5;
    CHECK((left || right));
  }
}

TEST_CASE("whitney rejects sets touching the window edge") {
  CellMask m = interval_mask(4, 16, {{0.0, 0.5}});
  CHECK_THROWS_AS(whitney(m), InvalidArgument);
}

TEST_CASE("property: whitney on random open sets, serial equals parallel") {
  testgen::Gen g(2024);
  for (int it = 0; it < 20; ++it) {
    const int n = it < 14 ? 1 : 2;
    const CellMask m = g.open_set(n, 5, n == 1 ? 128 : 24, g.integer(1, 3));
    const auto a = whitney(m, Exec::serial);
    const auto b = whitney(m, Exec::parallel);
    CHECK(a.cubes == b.cubes);
    const WhitneyCheck chk = check_whitney(m, a.cubes);
    CHECK(chk.ok());
    CHECK(chk.max_touching <= static_cast<std::size_t>(std::pow(12, n)));
  }
}
