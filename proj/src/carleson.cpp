#include "mltb/carleson.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mltb/errors.hpp"

namespace mltb {

namespace {

// Flat indices of the grid cells making up a cell-aligned cube, row-major.
std::vector<std::size_t> cube_cell_indices(const GridSpec& g, const DyadicCube& q) {
  const int n = g.dim();
  std::vector<std::int64_t> first(n), last(n), idx(n);
  g.cube_cells(q, first, last);
  std::vector<std::size_t> out;
  idx.assign(first.begin(), first.end());
  while (true) {
    out.push_back(g.flat(idx));
    int a = n - 1;
    while (a >= 0 && ++idx[a] == last[a]) {
      idx[a] = first[a];
      --a;
    }
    if (a < 0) break;
  }
  return out;
}

// ln of the part of log-cell j lying below `top` (the dt/t measure it carries).
double clipped_weight(const ScaleGrid& s, std::size_t j, double top) {
  const double k = s.per_octave();
  const double lower = s.t_min() * std::exp2(static_cast<double>(j) / k);
  const double upper = s.t_min() * std::exp2(static_cast<double>(j + 1) / k);
  if (!(lower < top)) return 0.0;
  return std::log(std::min(upper, top) / lower);
}

std::vector<double> density_values(const MeasureSampler& mu, std::size_t j) {
  std::vector<double> d;
  if (mu.density_on_grid) {
    d = mu.density_on_grid(j);
    if (d.size() != mu.grid.size()) throw InvalidArgument("density_on_grid returned the wrong size");
  } else {
    if (!mu.density) throw InvalidArgument("measure sampler has no density");
    d.resize(mu.grid.size());
    std::vector<double> x(mu.grid.dim());
    const double t = mu.scales[j];
    for (std::size_t i = 0; i < d.size(); ++i) {
      mu.grid.center(i, x);
      d[i] = mu.density(x, t);
    }
  }
  for (double v : d) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("density must be finite and nonnegative");
  }
  return d;
}

}  // namespace

CarlesonReport carleson_norm(const MeasureSampler& mu, std::span<const DyadicCube> family) {
  if (family.empty()) throw InvalidArgument("cube family is empty");
  std::vector<std::vector<std::size_t>> cells;
  double top = 0.0;
  for (const auto& q : family) {
    if (!mu.grid.cube_inside(q)) throw DomainError("tent base leaves the sampled window");
    if (q.side() > mu.scales.t_max() * (1.0 + 1e-12)) {
      throw DomainError("tent rises above the sampled scales");
    }
    cells.push_back(cube_cell_indices(mu.grid, q));
    top = std::max(top, q.side());
  }
  const double vol = mu.grid.cell_volume();
  std::vector<double> mass(family.size(), 0.0);
  const auto nq = static_cast<std::int64_t>(family.size());
  for (std::size_t j = 0; j < mu.scales.size(); ++j) {
    if (clipped_weight(mu.scales, j, top) == 0.0) break;
    const std::vector<double> d = density_values(mu, j);
#pragma omp parallel for schedule(dynamic)
    for (std::int64_t c = 0; c < nq; ++c) {
      const double w = clipped_weight(mu.scales, j, family[c].side());
      if (w == 0.0) continue;
      double s = 0.0;
      for (std::size_t i : cells[c]) s += d[i];
      mass[c] += s * vol * w;
    }
  }
  CarlesonReport rep;
  for (std::size_t c = 0; c < family.size(); ++c) {
    const double v = mass[c] / family[c].measure();
    rep.masses.push_back({family[c], v});
    if (c == 0 || v > rep.norm) {
      rep.norm = v;
      rep.witness = family[c];
    }
  }
  return rep;
}

CarlesonReport theta_carleson(const KernelFamily& k, std::span<const DyadicCube> family,
                              const GridSpec& grid, const ScaleGrid& scales,
                              const std::function<double(std::span<const double>)>& tau,
                              double eps_tail) {
  MeasureSampler mu;
  mu.grid = grid;
  mu.scales = scales;
  std::vector<double> tau_values;
  if (tau) {
    tau_values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) tau_values[i] = tau(grid.center(i));
  }
  mu.density_on_grid = [&k, &grid, &scales, &tau_values, eps_tail](std::size_t j) {
    const double t = scales[j];
    std::vector<double> d(grid.size());
    if (k.convolution_type) {
      const std::vector<double> x = grid.center(0);
      std::fill(d.begin(), d.end(), std::norm(theta_on_ones(k, t, x, eps_tail).value));
    } else {
      const auto cells = static_cast<std::int64_t>(grid.size());
#pragma omp parallel for schedule(dynamic)
      for (std::int64_t i = 0; i < cells; ++i) {
        const std::vector<double> x = grid.center(static_cast<std::size_t>(i));
        d[i] = std::norm(theta_on_ones(k, t, x, eps_tail).value);
      }
    }
    if (!tau_values.empty()) {
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (!(t > tau_values[i])) d[i] = 0.0;
      }
    }
    return d;
  };
  return carleson_norm(mu, family);
}

DivergenceTrend carleson_divergence(const KernelFamily& k, const DyadicCube& q, double h,
                                    const ScaleGrid& scales) {
  const double l = q.side();
  const double octs = std::log2(l / scales.t_min());
  const int octaves = static_cast<int>(std::floor(octs + 1e-9));
  if (octaves < 1) throw InvalidArgument("need at least one octave of scales below l(Q)");
  if (l > scales.t_max() * (1.0 + 1e-12)) throw DomainError("tent rises above the sampled scales");
  const GridSpec grid = GridSpec::over(q, h);
  const auto centre = q.center();

  // per-scale contribution to the normalised tent mass
  std::vector<double> contrib(scales.size(), 0.0);
  DivergenceTrend out;
  out.min_abs_theta = kInfinity;
  for (std::size_t j = 0; j < scales.size(); ++j) {
    const double w = clipped_weight(scales, j, l);
    if (w == 0.0) break;
    const double t = scales[j];
    double s = 0.0;
    if (k.convolution_type) {
      const double v = std::abs(theta_on_ones(k, t, centre).value);
      out.min_abs_theta = std::min(out.min_abs_theta, v);
      s = v * v * static_cast<double>(grid.size());
    } else {
      for (std::size_t i = 0; i < grid.size(); ++i) {
        const double v = std::abs(theta_on_ones(k, t, grid.center(i)).value);
        out.min_abs_theta = std::min(out.min_abs_theta, v);
        s += v * v;
      }
    }
    contrib[j] = s * grid.cell_volume() * w / q.measure();
  }
  for (int o = 1; o <= octaves; ++o) {
    const double lower = l * std::exp2(-o);
    double mass = 0.0;
    for (std::size_t j = 0; j < scales.size(); ++j) {
      const double cell_lo = scales.t_min() * std::exp2(static_cast<double>(j) / scales.per_octave());
      if (cell_lo >= lower * (1.0 - 1e-12)) mass += contrib[j];
    }
    out.masses.push_back(mass);
    out.increments.push_back(o == 1 ? mass : mass - out.masses[o - 2]);
  }
  return out;
}

double level_set_measure(const SampledFunction& g, const DyadicCube& q, double threshold) {
  double count = 0.0;
  for (std::size_t i : cube_cell_indices(g.grid(), q)) {
    if (std::abs(g[i]) > threshold) count += 1.0;
  }
  return count * g.grid().cell_volume();
}

EmbeddingReport embedding_check(const MeasureSampler& mu, const SampledFunction& f, double q,
                                const MollifierSpec& spec, std::span<const DyadicCube> family) {
  if (!(q >= 1.0)) throw InvalidArgument("embedding exponent must be >= 1");
  if (!(f.grid() == mu.grid)) throw InvalidArgument("f must live on the sampler grid");
  EmbeddingReport rep;
  rep.f_norm = lp_norm(f, q);
  if (!(rep.f_norm > 0.0)) throw InvalidArgument("f is zero");
  const double vol = mu.grid.cell_volume();
  const double w = mu.scales.weight();
  double s = 0.0;
  for (std::size_t j = 0; j < mu.scales.size(); ++j) {
    const std::vector<double> d = density_values(mu, j);
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) continue;
    const SampledFunction pf = smooth_approx(f, mu.scales[j], spec);
    for (std::size_t i = 0; i < d.size(); ++i) s += std::pow(std::abs(pf[i]), q) * d[i] * vol * w;
  }
  rep.lhs = std::pow(s, 1.0 / q);
  rep.ratio = rep.lhs / rep.f_norm;
  if (!family.empty()) rep.carleson = carleson_norm(mu, family).norm;
  return rep;
}

MeasureSampler paraproduct_measure(const SampledFunction& beta, const ScaleGrid& scales,
                                   const MollifierSpec& psi) {
  MeasureSampler mu;
  mu.grid = beta.grid();
  mu.scales = scales;
  mu.density_on_grid = [beta, scales, psi](std::size_t j) {
    const SampledFunction q2 = scale_convolve(beta, psi, scales[j], 2);
    std::vector<double> d(q2.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = std::norm(q2[i]);
    return d;
  };
  mu.density = [beta, psi](std::span<const double> x, double t) {
    return std::norm(scale_convolve(beta, psi, t, 2).at(x));
  };
  return mu;
}

}  // namespace mltb
