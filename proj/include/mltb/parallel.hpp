#pragma once

// Data-parallel kernels.  Every kernel has a plain serial reference and an
// OpenMP version selected by Exec; the two are kept result-identical (each
// output element accumulates its terms in the same order) and are compared
// in tests/unit/test_parallel.cpp and bench/bench_kernels.cpp.

#include <complex>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mltb/dyadic.hpp"
#include "mltb/exec.hpp"
#include "mltb/grid.hpp"

namespace mltb {

/// Convolution stencil on the cell lattice: out[c] = sum_j weight_j * in[c - offset_j].
struct Stencil {
  int dim = 1;
  std::vector<std::int64_t> offsets;  // tap-major, dim entries per tap
  std::vector<double> weights;

  std::size_t taps() const { return weights.size(); }
  double sum() const;
};

/// Stencil of the radial function u -> g(|u|) sampled at lattice offsets with
/// |offset * h| <= radius, weight g(|offset*h|) * h^n.
Stencil radial_stencil(int dim, double h, double radius,
                       const std::function<double(double)>& g);

void convolve(const GridSpec& grid, std::span<const Complex> in, const Stencil& stencil,
              std::span<Complex> out, Exec exec);

SampledFunction convolve(const SampledFunction& f, const Stencil& stencil,
                         Exec exec = Exec::parallel);

/// Points and weights (value * h^n) of the nonzero cells of one input slot.
struct SupportSamples {
  int dim = 1;
  std::vector<double> points;   // dim entries per sample
  std::vector<Complex> weights;
  std::size_t size() const { return weights.size(); }
};

SupportSamples support_samples(const SampledFunction& f);

using ThetaEval = std::function<Complex(double t, std::span<const double> x,
                                        std::span<const double> ys)>;

/// Full tensor quadrature  sum over y_1..y_m of theta_t(x, y) prod w_i  at
/// every centre of `grid`.
std::vector<Complex> tensor_theta(const ThetaEval& theta, double t, const GridSpec& grid,
                                  std::span<const SupportSamples> slots, Exec exec);

/// Squared set distance (in cell units, so adjacent cells are at 0) from every
/// cell of the mask to the complement of the open set, including the region
/// outside the window.  Entries for cells outside the set are 0.
std::vector<std::int64_t> cell_distances(const CellMask& mask, Exec exec);

}  // namespace mltb
