// Serial reference vs OpenMP versions of the data-parallel kernels.
// Arg 0 = serial, 1 = parallel.

#include <benchmark/benchmark.h>

#include <cmath>

#include "../tests/unit/gen.hpp"
#include "mltb/dyadic.hpp"
#include "mltb/parallel.hpp"

using namespace mltb;

namespace {

Exec exec_of(const benchmark::State& state) { return state.range(0) ? Exec::parallel : Exec::serial; }

void BM_Convolve1D(benchmark::State& state) {
  testgen::Gen gen(1);
  const GridSpec g = GridSpec::box(1, -64, 64, 1.0 / 256);
  const auto f = gen.function(g);
  const Stencil s = radial_stencil(1, g.h, 0.5, [](double r) { return std::exp(-r * r); });
  for (auto _ : state) benchmark::DoNotOptimize(convolve(f, s, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size() * s.taps()));
}

void BM_Convolve2D(benchmark::State& state) {
  testgen::Gen gen(2);
  const GridSpec g = GridSpec::box(2, -4, 4, 1.0 / 32);
  const auto f = gen.function(g);
  const Stencil s = radial_stencil(2, g.h, 0.25, [](double r) { return std::exp(-r * r); });
  for (auto _ : state) benchmark::DoNotOptimize(convolve(f, s, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.size() * s.taps()));
}

void BM_TensorTheta(benchmark::State& state) {
  testgen::Gen gen(3);
  const GridSpec g = GridSpec::box(1, 0, 1, 1.0 / 64);
  const auto f1 = gen.function(g), f2 = gen.function(g);
  const std::vector<SupportSamples> slots{support_samples(f1), support_samples(f2)};
  const ThetaEval theta = [](double t, std::span<const double> x, std::span<const double> ys) {
    double p = 1.0;
    for (double y : ys) p *= std::pow(1.0 + std::abs(x[0] - y) / t, -3.0) / t;
    return Complex(p);
  };
  for (auto _ : state) benchmark::DoNotOptimize(tensor_theta(theta, 0.25, g, slots, exec_of(state)));
}

void BM_CellDistances(benchmark::State& state) {
  testgen::Gen gen(4);
  const CellMask m = gen.open_set(2, 5, 96, 4);
  for (auto _ : state) benchmark::DoNotOptimize(cell_distances(m, exec_of(state)));
}

}  // namespace

BENCHMARK(BM_Convolve1D)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Convolve2D)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TensorTheta)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CellDistances)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
