#include "mltb/avgops.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "mltb/dyadic.hpp"
#include "mltb/errors.hpp"

namespace mltb {

namespace {

double bump4_shape(double r, int n) {
  if (r >= 1.0) return 0.0;
  const double u = 1.0 - r * r;
  // int_{B} (1 - |x|^2)^4 dx = pi^{n/2} 4! / Gamma(n/2 + 5)
  const double c = std::tgamma(0.5 * n + 5.0) / (std::pow(M_PI, 0.5 * n) * 24.0);
  return c * u * u * u * u;
}

double gauss_shape(double r, int n) { return std::pow(M_PI, -0.5 * n) * std::exp(-r * r); }

double mexican_hat_shape(double r, int n) { return (2.0 * n - 4.0 * r * r) * std::exp(-r * r); }

const std::vector<Profile>& profiles() {
  static const std::vector<Profile> all{
      {"bump4", Normalization::unit_mass, 1.0, bump4_shape},
      {"gauss", Normalization::unit_mass, 7.0, gauss_shape},
      {"mexican_hat", Normalization::mean_zero, 7.0, mexican_hat_shape},
  };
  return all;
}

}  // namespace

const Profile& find_profile(const std::string& name) {
  for (const auto& p : profiles()) {
    if (p.name == name) return p;
  }
  throw InvalidArgument("unknown profile '" + name + "'");
}

std::vector<std::string> profile_names() {
  std::vector<std::string> out;
  for (const auto& p : profiles()) out.push_back(p.name);
  return out;
}

Stencil profile_stencil(const MollifierSpec& spec, int n, double h, double t,
                        std::int64_t max_offset) {
  const Profile& prof = find_profile(spec.profile);
  const double tn = std::pow(t, -n);
  Stencil s = radial_stencil(n, h, prof.radius * t,
                             [&](double r) { return tn * prof.value(r / t, n); });
  if (prof.normalization == Normalization::unit_mass) {
    const double sum = s.sum();
    if (!(sum > 0.0)) throw ResolutionError("profile stencil has no mass at this resolution");
    for (auto& w : s.weights) w /= sum;
  } else {
    // remove the discrete mean with a unit-mass Gaussian on the same taps
    const double sum = s.sum();
    std::vector<double> g(s.taps());
    double gsum = 0.0;
    for (std::size_t j = 0; j < s.taps(); ++j) {
      double r2 = 0.0;
      for (int a = 0; a < n; ++a) {
        const double o = static_cast<double>(s.offsets[j * n + a]) * h / t;
        r2 += o * o;
      }
      g[j] = std::exp(-r2);
      gsum += g[j];
    }
    for (std::size_t j = 0; j < s.taps(); ++j) s.weights[j] -= sum * g[j] / gsum;
  }
  for (auto& w : s.weights) w *= spec.amplitude;

  if (max_offset >= 0) {
    Stencil c;
    c.dim = n;
    for (std::size_t j = 0; j < s.taps(); ++j) {
      bool keep = true;
      for (int a = 0; a < n; ++a) keep = keep && std::abs(s.offsets[j * n + a]) <= max_offset;
      if (!keep) continue;
      c.offsets.insert(c.offsets.end(), s.offsets.begin() + static_cast<std::ptrdiff_t>(j * n),
                       s.offsets.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
      c.weights.push_back(s.weights[j]);
    }
    return c;
  }
  return s;
}

namespace {

Stencil compose(const Stencil& a, const Stencil& b) {
  const int n = a.dim;
  std::vector<std::int64_t> lo(n, 0), hi(n, 0);
  auto bounds = [&](const Stencil& s, std::vector<std::int64_t>& l, std::vector<std::int64_t>& u) {
    l.assign(n, 0);
    u.assign(n, 0);
    for (std::size_t j = 0; j < s.taps(); ++j) {
      for (int d = 0; d < n; ++d) {
        l[d] = std::min(l[d], s.offsets[j * n + d]);
        u[d] = std::max(u[d], s.offsets[j * n + d]);
      }
    }
  };
  std::vector<std::int64_t> alo, ahi, blo, bhi;
  bounds(a, alo, ahi);
  bounds(b, blo, bhi);
  std::vector<std::int64_t> ext(n);
  std::size_t total = 1;
  for (int d = 0; d < n; ++d) {
    lo[d] = alo[d] + blo[d];
    hi[d] = ahi[d] + bhi[d];
    ext[d] = hi[d] - lo[d] + 1;
    total *= static_cast<std::size_t>(ext[d]);
  }
  if (total > (std::size_t{1} << 26)) throw ResourceError("composed stencil too large");
  std::vector<double> dense(total, 0.0);
  auto flat = [&](const std::int64_t* o1, const std::int64_t* o2) {
    std::size_t f = 0;
    for (int d = 0; d < n; ++d) f = f * static_cast<std::size_t>(ext[d]) + static_cast<std::size_t>(o1[d] + o2[d] - lo[d]);
    return f;
  };
  for (std::size_t i = 0; i < a.taps(); ++i) {
    for (std::size_t j = 0; j < b.taps(); ++j) {
      dense[flat(&a.offsets[i * n], &b.offsets[j * n])] += a.weights[i] * b.weights[j];
    }
  }
  Stencil out;
  out.dim = n;
  std::vector<std::int64_t> off(n);
  for (std::size_t f = 0; f < total; ++f) {
    if (dense[f] == 0.0) continue;
    std::size_t r = f;
    for (int d = n - 1; d >= 0; --d) {
      off[d] = static_cast<std::int64_t>(r % static_cast<std::size_t>(ext[d])) + lo[d];
      r /= static_cast<std::size_t>(ext[d]);
    }
    out.offsets.insert(out.offsets.end(), off.begin(), off.end());
    out.weights.push_back(dense[f]);
  }
  return out;
}

Stencil clip(const Stencil& s, const std::vector<std::int64_t>& max_offset) {
  const int n = s.dim;
  Stencil c;
  c.dim = n;
  for (std::size_t j = 0; j < s.taps(); ++j) {
    bool keep = true;
    for (int a = 0; a < n; ++a) keep = keep && std::abs(s.offsets[j * n + a]) <= max_offset[a];
    if (!keep) continue;
    c.offsets.insert(c.offsets.end(), s.offsets.begin() + static_cast<std::ptrdiff_t>(j * n),
                     s.offsets.begin() + static_cast<std::ptrdiff_t>((j + 1) * n));
    c.weights.push_back(s.weights[j]);
  }
  return c;
}

// Block means over 2^j cells per axis.
SampledFunction restrict_blocks(const SampledFunction& f, int j) {
  const GridSpec& g = f.grid();
  const int n = g.dim();
  const std::int64_t b = std::int64_t{1} << j;
  std::vector<std::int64_t> cells(n);
  for (int a = 0; a < n; ++a) cells[a] = g.cells[a] / b;
  GridSpec coarse(g.lo, cells, g.h * static_cast<double>(b));
  std::vector<Complex> v(coarse.size());
  std::vector<std::int64_t> idx(n), cidx(n);
  for (std::size_t i = 0; i < f.size(); ++i) {
    g.unflatten(i, idx);
    for (int a = 0; a < n; ++a) cidx[a] = idx[a] >> j;
    v[coarse.flat(cidx)] += f[i];
  }
  const double inv = 1.0 / std::pow(static_cast<double>(b), n);
  for (auto& x : v) x *= inv;
  return SampledFunction(coarse, std::move(v));
}

// Multilinear interpolation of coarse-cell-centre values at fine cell centres,
// constant beyond the outermost coarse centres.
SampledFunction prolong(const SampledFunction& coarse, const GridSpec& fine) {
  const GridSpec& c = coarse.grid();
  const int n = fine.dim();
  std::vector<Complex> v(fine.size());
  std::vector<double> x(n), frac(n);
  std::vector<std::int64_t> base(n), idx(n);
  for (std::size_t i = 0; i < fine.size(); ++i) {
    fine.center(i, x);
    for (int a = 0; a < n; ++a) {
      double u = (x[a] - c.lo[a]) / c.h - 0.5;
      u = std::clamp(u, 0.0, static_cast<double>(c.cells[a] - 1));
      base[a] = std::min<std::int64_t>(static_cast<std::int64_t>(std::floor(u)), c.cells[a] - 1);
      frac[a] = u - static_cast<double>(base[a]);
    }
    Complex acc{};
    for (std::size_t corner = 0; corner < (std::size_t{1} << n); ++corner) {
      double w = 1.0;
      for (int a = 0; a < n; ++a) {
        const bool up = (corner >> a) & 1u;
        idx[a] = std::min(base[a] + (up ? 1 : 0), c.cells[a] - 1);
        w *= up ? frac[a] : 1.0 - frac[a];
      }
      if (w != 0.0) acc += w * coarse[c.flat(idx)];
    }
    v[i] = acc;
  }
  return SampledFunction(fine, std::move(v));
}

}  // namespace

Stencil stencil_power(const Stencil& s, int power) {
  if (power < 1) throw InvalidArgument("stencil power must be >= 1");
  Stencil out = s;
  for (int p = 1; p < power; ++p) out = compose(out, s);
  return out;
}

SampledFunction scale_convolve(const SampledFunction& f, const MollifierSpec& spec, double t,
                               int power, Exec exec) {
  const GridSpec& g = f.grid();
  const int n = g.dim();
  if (!(t > 0.0)) throw InvalidArgument("scale must be positive");
  if (t < spec.c_res * g.h) {
    throw ResolutionError("scale t = " + std::to_string(t) + " below c_res * h = " +
                          std::to_string(spec.c_res * g.h));
  }
  int j = 0;
  if (spec.coarse_cells > 0) {
    while (true) {
      const int next = j + 1;
      const std::int64_t b = std::int64_t{1} << next;
      bool divides = true;
      for (auto c : g.cells) divides = divides && c % b == 0 && c / b >= 2;
      if (!divides || t / (g.h * static_cast<double>(b)) < spec.coarse_cells) break;
      j = next;
    }
  }
  const SampledFunction work = j == 0 ? f : restrict_blocks(f, j);
  const GridSpec& wg = work.grid();
  Stencil st = stencil_power(profile_stencil(spec, n, wg.h, t), power);
  std::vector<std::int64_t> reach(n);
  for (int a = 0; a < n; ++a) reach[a] = wg.cells[a] - 1;
  st = clip(st, reach);
  const SampledFunction out = convolve(work, st, exec);
  return j == 0 ? out : prolong(out, g);
}

SampledFunction dyadic_average(const SampledFunction& f, double t) {
  const GridSpec& g = f.grid();
  if (!(t >= g.h)) throw ResolutionError("A_t needs t >= h");
  if (!g.dyadic_aligned()) throw AlignmentError("A_t needs a dyadic-aligned grid");
  const int n = g.dim();
  const int gen = generation_above(t);
  const int shift = g.level() - gen;  // >= 1 because l > t >= h
  std::vector<std::int64_t> blo(n), bcount(n);
  for (int a = 0; a < n; ++a) {
    const std::int64_t o = g.origin(a);
    blo[a] = o >> shift;
    bcount[a] = ((o + g.cells[a] - 1) >> shift) - blo[a] + 1;
  }
  std::size_t blocks = 1;
  for (auto c : bcount) blocks *= static_cast<std::size_t>(c);
  std::vector<Complex> sums(blocks);
  std::vector<std::size_t> owner(f.size());
  std::vector<std::int64_t> idx(n);
  for (std::size_t i = 0; i < f.size(); ++i) {
    g.unflatten(i, idx);
    std::size_t b = 0;
    for (int a = 0; a < n; ++a) {
      b = b * static_cast<std::size_t>(bcount[a]) +
          static_cast<std::size_t>(((g.origin(a) + idx[a]) >> shift) - blo[a]);
    }
    owner[i] = b;
    sums[b] += f[i];
  }
  // cells outside the window are zero, so divide by the full cube cell count
  const double inv = std::ldexp(1.0, -shift * n);
  std::vector<Complex> v(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) v[i] = sums[owner[i]] * inv;
  return SampledFunction(g, std::move(v));
}

SampledFunction smooth_approx(const SampledFunction& f, double t, const MollifierSpec& spec,
                              Exec exec) {
  if (find_profile(spec.profile).normalization != Normalization::unit_mass) {
    throw InvalidArgument("P_t needs a unit-mass profile");
  }
  return scale_convolve(f, spec, t, 1, exec);
}

SampledFunction lp_projection(const SampledFunction& f, double t, const MollifierSpec& spec,
                              Exec exec) {
  if (find_profile(spec.profile).normalization != Normalization::mean_zero) {
    throw InvalidArgument("Q_t needs a mean-zero profile");
  }
  return scale_convolve(f, spec, t, 1, exec);
}

namespace {

SampledFunction product(const std::vector<SampledFunction>& fs) {
  SampledFunction p = fs.front();
  for (std::size_t i = 1; i < fs.size(); ++i) p = p * fs[i];
  return p;
}

}  // namespace

SampledFunction multilinear_average(std::span<const SampledFunction> f, double t) {
  if (f.empty()) throw InvalidArgument("need at least one function");
  std::vector<SampledFunction> a;
  for (const auto& fi : f) a.push_back(dyadic_average(fi, t));
  return product(a);
}

SampledFunction multilinear_smooth(std::span<const SampledFunction> f, double t,
                                   const MollifierSpec& spec) {
  if (f.empty()) throw InvalidArgument("need at least one function");
  std::vector<SampledFunction> p;
  for (const auto& fi : f) p.push_back(smooth_approx(fi, t, spec));
  return product(p);
}

std::vector<SampledFunction> error_split(std::span<const SampledFunction> f, double t,
                                         const MollifierSpec& spec) {
  const std::size_t m = f.size();
  if (m == 0) throw InvalidArgument("need at least one function");
  std::vector<SampledFunction> a, p;
  for (const auto& fi : f) {
    a.push_back(dyadic_average(fi, t));
    p.push_back(smooth_approx(fi, t, spec));
  }
  std::vector<SampledFunction> out;
  for (std::size_t j = 0; j < m; ++j) {
    SampledFunction e = a[j] - p[j];
    for (std::size_t i = 0; i < j; ++i) e = a[i] * e;
    for (std::size_t i = j + 1; i < m; ++i) e = e * p[i];
    out.push_back(std::move(e));
  }
  return out;
}

double profile_transform(const MollifierSpec& spec, int n, double rho) {
  const Profile& prof = find_profile(spec.profile);
  const double R = prof.radius;
  const auto& gl = gauss_legendre(8);
  const int panels = std::max(200, static_cast<int>(std::ceil(rho * R * 2.0)));
  const double w = R / panels;
  double s = 0.0;
  for (int p = 0; p < panels; ++p) {
    const double mid = (p + 0.5) * w, half = 0.5 * w;
    for (int j = 0; j < 8; ++j) {
      const double r = mid + half * gl.nodes[j];
      const double z = rho * r;
      double radial = 0.0;
      if (n == 1) {
        radial = 2.0 * std::cos(z);
      } else if (rho == 0.0) {
        radial = 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n) * std::pow(r, n - 1);
      } else if (n == 3) {
        radial = 4.0 * M_PI * r * r * (z < 1e-8 ? 1.0 : std::sin(z) / z);
      } else {
        radial = std::pow(2.0 * M_PI, 0.5 * n) * std::pow(rho, 1.0 - 0.5 * n) *
                 std::cyl_bessel_j(0.5 * n - 1.0, z) * std::pow(r, 0.5 * n);
      }
      s += half * gl.weights[j] * prof.value(r, n) * radial;
    }
  }
  return spec.amplitude * s;
}

namespace {

double cubed_scale_integral(const MollifierSpec& spec, int n, double lo, double hi) {
  const ScaleGrid grid(lo, hi, 32);
  double c = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double v = profile_transform(spec, n, grid[j]);
    c += v * v * v;
  }
  return c * grid.weight();
}

}  // namespace

CalderonResult calderon_normalize(const MollifierSpec& spec, int n, double t_lo, double t_hi,
                                  double stability) {
  const Profile& prof = find_profile(spec.profile);
  const double mean = profile_transform(spec, n, 0.0);
  const double scale = std::abs(profile_transform(spec, n, 1.0)) + 1e-300;
  if (prof.normalization != Normalization::mean_zero || std::abs(mean) > 1e-10 * scale) {
    throw InvalidArgument("Calderon normalisation needs a mean-zero profile");
  }
  CalderonResult r;
  r.constant = cubed_scale_integral(spec, n, t_lo, t_hi);
  r.extended = cubed_scale_integral(spec, n, t_lo / 4.0, t_hi * 4.0);
  if (!(r.constant > 0.0)) throw DomainError("int psi^(t e1)^3 dt/t is not positive");
  if (std::abs(r.extended - r.constant) > stability * std::abs(r.constant)) {
    throw DomainError("scale integral not stable under range extension");
  }
  r.spec = spec;
  r.spec.amplitude = spec.amplitude * std::cbrt(1.0 / r.constant);
  r.renormalized = cubed_scale_integral(r.spec, n, t_lo, t_hi);
  return r;
}

SampledFunction reproduce(const SampledFunction& f, const ScaleGrid& scales,
                          const MollifierSpec& spec, Exec exec) {
  if (find_profile(spec.profile).normalization != Normalization::mean_zero) {
    throw InvalidArgument("reproducing formula needs a mean-zero profile");
  }
  std::vector<Complex> acc(f.size());
  const double w = scales.weight();
  for (std::size_t k = 0; k < scales.size(); ++k) {
    const SampledFunction q3 = scale_convolve(f, spec, scales[k], 3, exec);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * q3[i];
  }
  return SampledFunction(f.grid(), std::move(acc));
}

}  // namespace mltb
