#pragma once

#include <span>
#include <string>
#include <vector>

#include "mltb/grid.hpp"
#include "mltb/parallel.hpp"
#include "mltb/quadrature.hpp"

namespace mltb {

enum class Normalization { unit_mass, mean_zero };

/// Radial profile selection.  Built-in names:
///   bump4        (1 - |x|^2)^4 on the unit ball, unit mass
///   gauss        pi^{-n/2} exp(-|x|^2), unit mass, radius 7
///   mexican_hat  (2n - 4|x|^2) exp(-|x|^2) = -Laplacian of exp(-|x|^2), mean zero, radius 7
struct MollifierSpec {
  std::string profile = "bump4";
  double amplitude = 1.0;  // multiplies the profile (set by calderon_normalize)
  /// > 0: convolutions at scale t run on the coarsest dyadic coarsening of the
  /// grid that keeps at least this many cells per t, then are interpolated
  /// back.  0: direct convolution on the input grid.
  int coarse_cells = 0;
  double c_res = 4.0;
};

struct Profile {
  std::string name;
  Normalization normalization = Normalization::unit_mass;
  double radius = 1.0;  // support (or negligibility) radius in units of t
  double (*shape)(double r, int n) = nullptr;
  double value(double r, int n) const { return shape(r, n); }
};

const Profile& find_profile(const std::string& name);
std::vector<std::string> profile_names();

/// Discrete stencil of amplitude * t^{-n} g(|x|/t) at spacing h, corrected so
/// that its sum is exactly 1 (unit mass) or 0 (mean zero) in floating point
/// up to rounding.  Offsets are cut at `max_offset` cells per axis when >= 0.
Stencil profile_stencil(const MollifierSpec& spec, int n, double h, double t,
                        std::int64_t max_offset = -1);

/// The stencil convolved with itself `power` times in total (power >= 1).
Stencil stencil_power(const Stencil& s, int power);

/// (amplitude phi_t)^{*power} * f on the grid of f, honouring spec.coarse_cells.
SampledFunction scale_convolve(const SampledFunction& f, const MollifierSpec& spec, double t,
                               int power = 1, Exec exec = Exec::parallel);

/// A_t f(x) = average of f over Q(x, t).  Requires t >= h and a dyadic-aligned grid.
SampledFunction dyadic_average(const SampledFunction& f, double t);

/// P_t f = phi_t * f with a unit-mass profile.
SampledFunction smooth_approx(const SampledFunction& f, double t, const MollifierSpec& spec,
                              Exec exec = Exec::parallel);

/// Q_t f = psi_t * f with a mean-zero profile.
SampledFunction lp_projection(const SampledFunction& f, double t, const MollifierSpec& spec,
                              Exec exec = Exec::parallel);

/// E_t^j = (prod_{i<j} A_t f_i)(A_t f_j - P_t f_j)(prod_{i>j} P_t f_i), j = 1..m.
std::vector<SampledFunction> error_split(std::span<const SampledFunction> f, double t,
                                         const MollifierSpec& spec);

/// prod_i A_t f_i and prod_i P_t f_i (the multilinear operators).
SampledFunction multilinear_average(std::span<const SampledFunction> f, double t);
SampledFunction multilinear_smooth(std::span<const SampledFunction> f, double t,
                                   const MollifierSpec& spec);

/// Radial Fourier transform  psi^(xi) = int psi(x) e^{-i x.xi} dx  of the
/// profile (amplitude included) at |xi| = rho, dimension n.
double profile_transform(const MollifierSpec& spec, int n, double rho);

struct CalderonResult {
  MollifierSpec spec;   // amplitude scaled by c^{-1/3}
  double constant = 0.0;   // measured c for the input spec
  double extended = 0.0;   // c re-measured on a range 4x wider at both ends
  double renormalized = 0.0;  // c for the returned spec
};

/// c = int_{t_lo}^{t_hi} psi^(t e_1)^3 dt/t; rejects profiles with nonzero mean,
/// c <= 0 or c unstable under range extension.
CalderonResult calderon_normalize(const MollifierSpec& spec, int n, double t_lo = 1.0 / 256,
                                  double t_hi = 256.0, double stability = 1e-6);

/// sum_k Q_{t_k}^3 f ln2/K.
SampledFunction reproduce(const SampledFunction& f, const ScaleGrid& scales,
                          const MollifierSpec& spec, Exec exec = Exec::parallel);

}  // namespace mltb
