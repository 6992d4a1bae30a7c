#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mltb/dyadic.hpp"
#include "mltb/grid.hpp"
#include "mltb/kernels.hpp"
#include "mltb/quadrature.hpp"

namespace mltb {

/// S(f)(x) = ( sum_k |Theta_{t_k}(f)(x)|^2 ln2/K )^{1/2} on the grid of f[0].
SampledFunction square_function(const KernelFamily& k, std::span<const SampledFunction> f,
                                const ScaleGrid& scales, const ApplyOptions& opt = {});

/// Which lower limit a truncated g uses.
enum class Truncation {
  zero,  // int_0^{upper}: the scale grid's t_min stands in for 0
  tau,   // int_{tau_Q(x)}^{upper}
};

/// g(x) = ( sum over t_k in (lower(x), upper) of |Theta_{t_k}(1..1)(x)|^2 ln2/K )^{1/2}
/// at the cell centres of Q sampled at spacing h.  An empty range gives 0.
struct TruncatedG {
  SampledFunction values;
  Truncation truncation = Truncation::zero;
  double upper = 0.0;
};

TruncatedG truncated_g(const KernelFamily& k, const DyadicCube& q, double h,
                       const ScaleGrid& scales, const std::function<double(std::span<const double>)>& lower,
                       double upper, Truncation truncation);

/// g_{Q,eps}: lower = eps, upper = min(1/eps, l(Q)); zero when l(Q) <= eps.
TruncatedG truncated_g_eps(const KernelFamily& k, const DyadicCube& q, double h,
                           const ScaleGrid& scales, double eps);

struct RatioReport {
  double ratio = 0.0;
  double s_norm = 0.0;
  std::vector<double> input_norms;
  double t_min = 0.0;
  double t_max = 0.0;
  /// Upper bound on the missing int_{t_max}^inf contribution to ||S||_p
  /// relative to the computed norm, from the kernel's decay (reported, not added).
  double tail_budget = 0.0;
};

/// ||S(f)||_p / prod ||f_i||_{p_i}.  Rejects zero inputs and index tuples of the
/// wrong arity.
RatioReport bound_ratio(const KernelFamily& k, std::span<const SampledFunction> f,
                        const IndexTuple& idx, const ScaleGrid& scales,
                        const ApplyOptions& opt = {});

}  // namespace mltb
