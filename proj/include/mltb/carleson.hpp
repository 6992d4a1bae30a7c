#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mltb/avgops.hpp"
#include "mltb/dyadic.hpp"
#include "mltb/grid.hpp"
#include "mltb/kernels.hpp"
#include "mltb/quadrature.hpp"

namespace mltb {

/// Density of dmu against dx dt/t, sampled on `grid` x `scales`.
struct MeasureSampler {
  GridSpec grid;
  ScaleGrid scales;
  std::function<double(std::span<const double> x, double t)> density;
  /// Optional per-scale batch evaluation (index into scales -> values on every
  /// cell of grid); used instead of `density` when set.
  std::function<std::vector<double>(std::size_t scale_index)> density_on_grid;
};

/// Tent mass over Q divided by |Q| for one cube.
struct TentMass {
  DyadicCube cube;
  double normalized_mass = 0.0;
};

struct CarlesonReport {
  double norm = 0.0;
  DyadicCube witness;
  std::vector<TentMass> masses;  // in family order
};

/// max over the family of (1/|Q|) sum over tent samples of density h^n w_t, where
/// w_t is ln2/K clipped to the part of each log-cell below l(Q).  Every tent
/// base must be a union of grid cells.
CarlesonReport carleson_norm(const MeasureSampler& mu, std::span<const DyadicCube> family);

/// Carleson norm of |Theta_t(1..1)(x)|^2 dx dt/t.  With `tau` set, each point x
/// only counts scales t > tau(x) (the truncated variant).
CarlesonReport theta_carleson(const KernelFamily& k, std::span<const DyadicCube> family,
                              const GridSpec& grid, const ScaleGrid& scales,
                              const std::function<double(std::span<const double>)>& tau = {},
                              double eps_tail = 1e-10);

/// Tent masses of a kernel with constant Theta_t(1..1) = c over nested scale
/// ranges: entry j uses scales with t_min * 2^{octaves - 1 - j} .. l(Q).  Used to
/// detect log-divergence; returns the mass per added octave.
struct DivergenceTrend {
  std::vector<double> masses;     // cumulative, one per octave count 1..octaves
  std::vector<double> increments;
  double min_abs_theta = 0.0;     // min |Theta_t(1..1)| over the samples
};
DivergenceTrend carleson_divergence(const KernelFamily& k, const DyadicCube& q, double h,
                                    const ScaleGrid& scales);

/// |{x in Q : g(x) > N}| by cell counting (Q must be cell-aligned; g >= 0).
double level_set_measure(const SampledFunction& g, const DyadicCube& q, double threshold);

struct EmbeddingReport {
  double ratio = 0.0;
  double lhs = 0.0;           // (sum |P_t f|^q dmu)^{1/q}
  double f_norm = 0.0;
  double carleson = 0.0;      // carleson norm over the supplied family
};

/// ( sum |P_t f(x)|^q density h^n ln2/K )^{1/q} / ||f||_q with P_t from spec.
EmbeddingReport embedding_check(const MeasureSampler& mu, const SampledFunction& f, double q,
                                const MollifierSpec& spec,
                                std::span<const DyadicCube> family = {});

/// |Q_t^2 beta(x)|^2 as a MeasureSampler density (paraproduct measure).
MeasureSampler paraproduct_measure(const SampledFunction& beta, const ScaleGrid& scales,
                                   const MollifierSpec& psi);

}  // namespace mltb
