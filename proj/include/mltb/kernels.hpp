#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mltb/grid.hpp"
#include "mltb/parallel.hpp"
#include "mltb/quadrature.hpp"

namespace mltb {

/// Radial profile u -> g(|u|) used as one factor of a product kernel
///   theta_t(x, y) = prod_i t^{-n} g_i(|x - y_i| / t).
/// Profiles are negligible (below double precision of their peak) beyond `radius`.
struct ConvolutionFactor {
  std::function<double(double)> profile;
  double radius = 0.0;
};

struct KernelFamily {
  std::string name;
  int m = 1;
  int n = 1;
  double decay = 2.0;     // N
  double holder = 1.0;    // gamma
  double constant = 1.0;  // declared C
  std::function<Complex(double t, std::span<const double> x, std::span<const double> ys)> eval;
  /// Non-empty (size m) for product kernels.  When every radius is finite
  /// apply_theta uses the stencil fast path; theta_on_ones always uses the product.
  std::vector<ConvolutionFactor> factors;
  /// theta_t(x, y) depends only on x - y_1, ..., x - y_m.
  bool convolution_type = false;

  /// Checks m, n >= 1, N > n, 0 < gamma <= 1, C > 0 and that eval is set.
  void validate() const;
  double exponent() const { return decay + holder; }
};

struct KernelParams {
  int m = 1;
  int n = 1;
  double decay = 2.0;
  double holder = 1.0;
  double constant = 1.0;
};

/// Built-in families by name:
///   power       t^{-mn} prod (1 + |x-y_i|/t)^{-(N+gamma)}
///   gaussian    prod t^{-n} exp(-|x-y_i|^2/t^2)
///   normalized  prod t^{-n} pi^{-n/2} exp(-|x-y_i|^2/t^2)   (each factor integrates to 1)
///   cancelling  mexican-hat first factor (mean zero), normalized Gaussians after
///   slow        t^{-mn} prod (1 + |x-y_i|/t)^{-n/2}          (violates the size bound)
KernelFamily builtin_kernel(const std::string& name, const KernelParams& params);
std::vector<std::string> builtin_kernel_names();

/// theta_t - Theta_t(1..1)(x) * (P_t-product), so that the result annihilates
/// constants: the first factor of the product becomes  theta - c * normalised
/// Gaussian product.  Requires a translation invariant kernel.
KernelFamily cancelling_modification(const KernelFamily& k, double theta_ones);

// --- bound verification ----------------------------------------------------

enum class BoundMode { size, reg_y, reg_x };
std::string to_string(BoundMode mode);
BoundMode bound_mode_from_string(const std::string& s);

/// Deterministic sample plan: t log-uniform in [t_lo, t_hi], x uniform in
/// [-extent, extent]^n, y_i = x + t * r * direction with r log-spread up to
/// max_distance, perturbations of size in [min_perturbation, 1] * t.
struct SamplePlan {
  std::uint64_t seed = 1;
  std::size_t count = 2000;
  double t_lo = 0.25;
  double t_hi = 4.0;
  double extent = 4.0;
  double max_distance = 64.0;
  double min_perturbation = 1e-3;
};

struct BoundSample {
  double t = 0.0;
  std::vector<double> x, x_alt;
  std::vector<double> ys, ys_alt;  // m*n entries each
  int slot = 0;                    // perturbed slot for reg_y
};

struct BoundsReport {
  BoundMode mode = BoundMode::size;
  double max_ratio = 0.0;
  double declared_constant = 1.0;
  bool pass = false;
  BoundSample witness;
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

std::vector<BoundSample> generate_samples(const KernelFamily& k, BoundMode mode,
                                          const SamplePlan& plan);

/// max over samples of |lhs| / rhs with the right-hand side evaluated at C = 1;
/// pass iff max_ratio <= declared constant.
BoundsReport verify_kernel_bounds(const KernelFamily& k, BoundMode mode, const SamplePlan& plan);

// --- application -----------------------------------------------------------

struct ApplyOptions {
  double c_res = 4.0;  // require t >= c_res * h
  bool use_factors = true;
  Exec exec = Exec::parallel;
};

/// Theta_t(f_1..f_m) at every cell centre of `eval_grid`.  All inputs must
/// share the spacing of eval_grid.
SampledFunction apply_theta(const KernelFamily& k, double t, std::span<const SampledFunction> f,
                            const GridSpec& eval_grid, const ApplyOptions& opt = {});

struct ThetaOnes {
  Complex value;
  double tail_radius = 0.0;   // R in units of t
  double tail_bound = 0.0;    // certified bound on the discarded tail
  double quadrature_estimate = 0.0;
};

/// Theta_t(1, ..., 1)(x) = int theta_t(x, y) dy by graded Gauss-Legendre cells
/// (tensor over slots) on the ball of radius R t, with R chosen from the
/// declared decay so the tail is below eps_tail.
ThetaOnes theta_on_ones(const KernelFamily& k, double t, std::span<const double> x,
                        double eps_tail = 1e-8);

}  // namespace mltb
