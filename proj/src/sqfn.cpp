#include "mltb/sqfn.hpp"

#include <cmath>

#include "mltb/errors.hpp"

namespace mltb {

SampledFunction square_function(const KernelFamily& k, std::span<const SampledFunction> f,
                                const ScaleGrid& scales, const ApplyOptions& opt) {
  if (f.empty()) throw InvalidArgument("square function needs inputs");
  const GridSpec& grid = f[0].grid();
  std::vector<double> acc(grid.size(), 0.0);
  const double w = scales.weight();
  for (std::size_t j = 0; j < scales.size(); ++j) {
    const SampledFunction th = apply_theta(k, scales[j], f, grid, opt);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::norm(th[i]) * w;
  }
  std::vector<Complex> v(acc.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sqrt(acc[i]);
  return SampledFunction(grid, std::move(v));
}

TruncatedG truncated_g(const KernelFamily& k, const DyadicCube& q, double h,
                       const ScaleGrid& scales,
                       const std::function<double(std::span<const double>)>& lower, double upper,
                       Truncation truncation) {
  const GridSpec grid = GridSpec::over(q, h);
  const double w = scales.weight();
  // |Theta_t(1..1)|^2 per scale; translation invariant kernels need one point
  std::vector<double> at_centre(scales.size(), 0.0);
  const auto centre = q.center();
  if (k.convolution_type) {
    for (std::size_t j = 0; j < scales.size(); ++j) {
      at_centre[j] = std::norm(theta_on_ones(k, scales[j], centre).value);
    }
  }
  std::vector<Complex> v(grid.size());
  std::vector<double> x(grid.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    grid.center(i, x);
    const double lo = truncation == Truncation::zero || !lower ? 0.0 : lower(x);
    double s = 0.0;
    for (std::size_t j = 0; j < scales.size(); ++j) {
      const double t = scales[j];
      if (!(t > lo && t < upper)) continue;
      s += (k.convolution_type ? at_centre[j] : std::norm(theta_on_ones(k, t, x).value)) * w;
    }
    v[i] = std::sqrt(s);
  }
  TruncatedG out;
  out.values = SampledFunction(grid, std::move(v));
  out.truncation = truncation;
  out.upper = upper;
  return out;
}

TruncatedG truncated_g_eps(const KernelFamily& k, const DyadicCube& q, double h,
                           const ScaleGrid& scales, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("eps must be positive");
  if (q.side() <= eps) {
    TruncatedG out;
    out.values = SampledFunction::zeros(GridSpec::over(q, h));
    out.upper = eps;
    return out;
  }
  const double upper = std::min(1.0 / eps, q.side());
  return truncated_g(k, q, h, scales, [eps](std::span<const double>) { return eps; }, upper,
                     Truncation::tau);
}

RatioReport bound_ratio(const KernelFamily& k, std::span<const SampledFunction> f,
                        const IndexTuple& idx, const ScaleGrid& scales, const ApplyOptions& opt) {
  if (static_cast<int>(f.size()) != k.m || idx.m() != f.size()) {
    throw InvalidArgument("index tuple and inputs must have m entries");
  }
  if (idx.target() < 1.0) throw InvalidArgument("target exponent below 1 (quasi-norm range) not supported");
  RatioReport r;
  double denom = 1.0, l1 = 1.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double nrm = lp_norm(f[i], idx.slot(i));
    if (!(nrm > 0.0)) throw InvalidArgument("input " + std::to_string(i) + " is zero");
    r.input_norms.push_back(nrm);
    denom *= nrm;
    l1 *= lp_norm(f[i], 1.0);
  }
  const SampledFunction s = square_function(k, f, scales, opt);
  r.s_norm = lp_norm(s, idx.target());
  r.ratio = r.s_norm / denom;
  r.t_min = scales.t_min();
  r.t_max = scales.t_max();
  double volume = 1.0;
  for (int a = 0; a < s.grid().dim(); ++a) volume *= static_cast<double>(s.grid().cells[a]) * s.grid().h;
  const int mn = k.m * k.n;
  r.tail_budget = std::pow(volume, 1.0 / idx.target()) * k.constant * l1 *
                  std::pow(scales.t_max(), -mn) / std::sqrt(2.0 * mn);
  return r;
}

}  // namespace mltb
