#include <doctest.h>

#include <cmath>
#include <limits>

#include "gen.hpp"
#include "mltb/parallel.hpp"

using namespace mltb;

TEST_CASE("radial stencil sums to the Riemann sum of the profile") {
  const Stencil s = radial_stencil(1, 0.25, 1.0, [](double) { return 1.0; });
  CHECK(s.taps() == 9);
  CHECK(s.sum() == doctest::Approx(2.25));
  CHECK(radial_stencil(2, 0.5, 1.0, [](double) { return 1.0; }).taps() == 13);
}

TEST_CASE("convolution against a direct sum") {
  const GridSpec g = GridSpec::box(1, 0, 2, 0.25);
  std::vector<Complex> v(g.size());
  v[3] = 1.0;
  const SampledFunction f(g, v);
  const Stencil s = radial_stencil(1, 0.25, 0.5, [](double r) { return 1.0 + r; });
  const auto out = convolve(f, s, Exec::serial);
  // out[c] = w(c - 3) for |c - 3| <= 2
  CHECK(out[3].real() == doctest::Approx(0.25));
  CHECK(out[4].real() == doctest::Approx(1.25 * 0.25));
  CHECK(out[5].real() == doctest::Approx(1.5 * 0.25));
  CHECK(out[6] == Complex(0.0));
  CHECK(out[0] == Complex(0.0));
}

TEST_CASE("property: serial and parallel convolution agree bit for bit") {
  testgen::Gen gen(17);
  for (int it = 0; it < 20; ++it) {
    const int n = gen.integer(1, 2);
    const GridSpec g = GridSpec::box(n, -1, 1, n == 1 ? 1.0 / 64 : 1.0 / 16);
    const auto f = gen.function(g);
    const double r = gen.uniform(0.05, 0.5);
    const Stencil s = radial_stencil(n, g.h, r, [](double u) { return std::exp(-u * u); });
    const auto a = convolve(f, s, Exec::serial);
    const auto b = convolve(f, s, Exec::parallel);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
  }
}

TEST_CASE("property: tensor quadrature serial equals parallel and matches a direct sum") {
  testgen::Gen gen(23);
  const ThetaEval theta = [](double t, std::span<const double> x, std::span<const double> ys) {
    Complex p = 1.0;
    for (double y : ys) p *= std::exp(-(x[0] - y) * (x[0] - y) / (t * t));
    return p;
  };
  for (int it = 0; it < 5; ++it) {
    const GridSpec g = GridSpec::box(1, 0, 1, 1.0 / 16);
    const auto f1 = gen.function(g), f2 = gen.function(g);
    const std::vector<SupportSamples> slots{support_samples(f1), support_samples(f2)};
    const auto a = tensor_theta(theta, 0.3, g, slots, Exec::serial);
    const auto b = tensor_theta(theta, 0.3, g, slots, Exec::parallel);
    REQUIRE(a.size() == g.size());
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(a[i] == b[i]);
    // direct oracle at one centre
    const std::size_t c = 5;
    const double x = g.center(c)[0];
    Complex direct = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i)
      for (std::size_t j = 0; j < g.size(); ++j) {
        const double y1 = g.center(i)[0], y2 = g.center(j)[0];
        direct += std::exp(-(x - y1) * (x - y1) / 0.09) * std::exp(-(x - y2) * (x - y2) / 0.09) * f1[i] *
                  f2[j] * g.h * g.h;
      }
    CHECK(std::abs(a[c] - direct) < 1e-13);
  }
}

TEST_CASE("property: cell distances match brute force, serial equals parallel") {
  testgen::Gen gen(99);
  for (int it = 0; it < 20; ++it) {
    const int n = gen.integer(1, 2);
    const std::int64_t cells = n == 1 ? 40 : 14;
    const CellMask m = gen.open_set(n, 3, cells, gen.integer(1, 3));
    const auto a = cell_distances(m, Exec::serial);
    const auto b = cell_distances(m, Exec::parallel);
    CHECK(a == b);
    std::vector<std::int64_t> i(n), j(n);
    for (std::size_t f = 0; f < m.size(); ++f) {
      if (!m.inside[f]) {
        CHECK(a[f] == 0);
        continue;
      }
      m.unflatten(f, i);
      std::int64_t best = std::numeric_limits<std::int64_t>::max();
      // lattice extended by one layer so the outside of the window counts
      const std::int64_t span = cells + 2;
      std::int64_t total = 1;
      for (int d = 0; d < n; ++d) total *= span;
      for (std::int64_t e = 0; e < total; ++e) {
        std::int64_t r = e;
        bool outside = false;
        for (int d = n - 1; d >= 0; --d) {
          j[d] = r % span - 1;
          r /= span;
          outside = outside || j[d] < 0 || j[d] >= cells;
        }
        if (!outside && m.inside[m.flat(j)]) continue;
        std::int64_t d2 = 0;
        for (int d = 0; d < n; ++d) {
          const std::int64_t gap = std::max<std::int64_t>(0, std::abs(i[d] - j[d]) - 1);
          d2 += gap * gap;
        }
        best = std::min(best, d2);
      }
      REQUIRE(a[f] == best);
    }
  }
}
