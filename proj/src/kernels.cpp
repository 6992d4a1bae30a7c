#include "mltb/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mltb/errors.hpp"

namespace mltb {

namespace {

double norm_diff(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Surface area of the unit sphere in R^n.
double sphere_area(int n) { return 2.0 * std::pow(M_PI, 0.5 * n) / std::tgamma(0.5 * n); }

double gaussian_profile(double r) { return std::exp(-r * r); }

KernelFamily product_kernel(std::string name, const KernelParams& p,
                            std::vector<ConvolutionFactor> factors) {
  KernelFamily k;
  k.name = std::move(name);
  k.m = p.m;
  k.n = p.n;
  k.decay = p.decay;
  k.holder = p.holder;
  k.constant = p.constant;
  k.convolution_type = true;
  k.factors = std::move(factors);
  const int m = p.m, n = p.n;
  auto fs = k.factors;
  k.eval = [fs, m, n](double t, std::span<const double> x, std::span<const double> ys) {
    double v = std::pow(t, -m * n);
    for (int i = 0; i < m; ++i) {
      v *= fs[i].profile(norm_diff(x, ys.subspan(static_cast<std::size_t>(i) * n, n)) / t);
    }
    return Complex(v, 0.0);
  };
  return k;
}

}  // namespace

void KernelFamily::validate() const {
  if (m < 1 || n < 1) throw InvalidArgument("kernel needs m >= 1 and n >= 1");
  if (!(decay > n)) throw InvalidArgument("declared decay N must exceed n (integral would diverge)");
  if (!(holder > 0.0 && holder <= 1.0)) throw InvalidArgument("holder exponent must lie in (0, 1]");
  if (!(constant > 0.0)) throw InvalidArgument("declared constant must be positive");
  if (!eval) throw InvalidArgument("kernel evaluator missing");
  if (!factors.empty() && static_cast<int>(factors.size()) != m) {
    throw InvalidArgument("kernel factor list must have m entries");
  }
}

std::vector<std::string> builtin_kernel_names() {
  return {"power", "gaussian", "normalized", "cancelling", "slow"};
}

KernelFamily builtin_kernel(const std::string& name, const KernelParams& p) {
  const int n = p.n;
  const double s = p.decay + p.holder;
  const double gauss_norm = std::pow(M_PI, -0.5 * n);
  KernelFamily k;
  if (name == "power") {
    k = product_kernel(name, p,
                       std::vector<ConvolutionFactor>(
                           p.m, {[s](double r) { return std::pow(1.0 + r, -s); }, kInfinity}));
  } else if (name == "gaussian") {
    k = product_kernel(name, p, std::vector<ConvolutionFactor>(p.m, {gaussian_profile, 7.0}));
  } else if (name == "normalized") {
    k = product_kernel(
        name, p,
        std::vector<ConvolutionFactor>(
            p.m, {[gauss_norm](double r) { return gauss_norm * std::exp(-r * r); }, 7.0}));
  } else if (name == "cancelling") {
    std::vector<ConvolutionFactor> fs(
        p.m, {[gauss_norm](double r) { return gauss_norm * std::exp(-r * r); }, 7.0});
    fs[0] = {[n](double r) { return (2.0 * n - 4.0 * r * r) * std::exp(-r * r); }, 7.0};
    k = product_kernel(name, p, std::move(fs));
  } else if (name == "slow") {
    const double e = 0.5 * n;
    k = product_kernel(name, p,
                       std::vector<ConvolutionFactor>(
                           p.m, {[e](double r) { return std::pow(1.0 + r, -e); }, kInfinity}));
  } else {
    throw InvalidArgument("unknown kernel '" + name + "'");
  }
  k.validate();
  return k;
}

KernelFamily cancelling_modification(const KernelFamily& k, double theta_ones) {
  if (!k.convolution_type) throw InvalidArgument("cancelling modification needs a translation invariant kernel");
  KernelFamily out = k;
  out.name = k.name + "-cancelled";
  out.factors.clear();
  const int m = k.m, n = k.n;
  const double gauss_norm = std::pow(M_PI, -0.5 * n);
  auto base = k.eval;
  out.eval = [base, theta_ones, m, n, gauss_norm](double t, std::span<const double> x,
                                                   std::span<const double> ys) {
    double p = std::pow(t, -m * n);
    for (int i = 0; i < m; ++i) {
      const double r = norm_diff(x, ys.subspan(static_cast<std::size_t>(i) * n, n)) / t;
      p *= gauss_norm * std::exp(-r * r);
    }
    return base(t, x, ys) - theta_ones * p;
  };
  return out;
}

// --- bound verification ------------------------------------------------------------

std::string to_string(BoundMode mode) {
  switch (mode) {
    case BoundMode::size: return "size";
    case BoundMode::reg_y: return "reg_y";
    case BoundMode::reg_x: return "reg_x";
  }
  return "size";
}

BoundMode bound_mode_from_string(const std::string& s) {
  if (s == "size") return BoundMode::size;
  if (s == "reg_y") return BoundMode::reg_y;
  if (s == "reg_x") return BoundMode::reg_x;
  throw InvalidArgument("unknown bound mode '" + s + "'");
}

namespace {

// Uniform [0, 1) from the top 53 bits; avoids implementation-defined
// std::uniform_real_distribution so plans are identical across toolchains.
double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

void random_direction(std::mt19937_64& rng, std::span<double> d) {
  if (d.size() == 1) {
    d[0] = unit(rng) < 0.5 ? -1.0 : 1.0;
    return;
  }
  double s = 0.0;
  do {
    s = 0.0;
    for (auto& v : d) {
      const double u1 = 1.0 - unit(rng), u2 = unit(rng);
      v = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
      s += v * v;
    }
  } while (s < 1e-12);
  s = std::sqrt(s);
  for (auto& v : d) v /= s;
}

}  // namespace

std::vector<BoundSample> generate_samples(const KernelFamily& k, BoundMode mode,
                                          const SamplePlan& plan) {
  if (plan.count == 0) throw InvalidArgument("sample plan is empty");
  if (!(plan.t_lo > 0.0) || plan.t_hi < plan.t_lo || !(plan.max_distance >= 0.0) ||
      !(plan.min_perturbation > 0.0 && plan.min_perturbation <= 1.0)) {
    throw InvalidArgument("degenerate sample plan");
  }
  std::mt19937_64 rng(plan.seed);
  const int m = k.m, n = k.n;
  std::vector<BoundSample> out(plan.count);
  std::vector<double> dir(n);
  for (auto& s : out) {
    s.t = plan.t_lo * std::pow(plan.t_hi / plan.t_lo, unit(rng));
    s.x.resize(n);
    for (auto& v : s.x) v = plan.extent * (2.0 * unit(rng) - 1.0);
    s.ys.resize(static_cast<std::size_t>(m) * n);
    for (int i = 0; i < m; ++i) {
      random_direction(rng, dir);
      const double r = std::pow(1.0 + plan.max_distance, unit(rng)) - 1.0;
      for (int a = 0; a < n; ++a) s.ys[i * n + a] = s.x[a] + s.t * r * dir[a];
    }
    s.x_alt = s.x;
    s.ys_alt = s.ys;
    const double delta = s.t * std::pow(plan.min_perturbation, unit(rng));
    random_direction(rng, dir);
    s.slot = static_cast<int>(unit(rng) * m);
    if (mode == BoundMode::reg_y) {
      for (int a = 0; a < n; ++a) s.ys_alt[s.slot * n + a] += delta * dir[a];
    } else if (mode == BoundMode::reg_x) {
      for (int a = 0; a < n; ++a) s.x_alt[a] += delta * dir[a];
    }
  }
  return out;
}

BoundsReport verify_kernel_bounds(const KernelFamily& k, BoundMode mode, const SamplePlan& plan) {
  k.validate();
  const auto samples = generate_samples(k, mode, plan);
  const int m = k.m, n = k.n;
  const double s_exp = k.exponent();
  BoundsReport rep;
  rep.mode = mode;
  rep.declared_constant = k.constant;
  rep.samples = samples.size();
  rep.seed = plan.seed;
  rep.witness = samples.front();
  for (const auto& s : samples) {
    double log_rhs = -m * n * std::log(s.t);
    for (int i = 0; i < m; ++i) {
      const double d = norm_diff(s.x, std::span<const double>(s.ys).subspan(static_cast<std::size_t>(i) * n, n));
      log_rhs -= s_exp * std::log1p(d / s.t);
    }
    double lhs = 0.0;
    const Complex base = k.eval(s.t, s.x, s.ys);
    if (mode == BoundMode::size) {
      lhs = std::abs(base);
    } else if (mode == BoundMode::reg_y) {
      const double d = norm_diff(std::span<const double>(s.ys).subspan(static_cast<std::size_t>(s.slot) * n, n),
                                 std::span<const double>(s.ys_alt).subspan(static_cast<std::size_t>(s.slot) * n, n));
      lhs = std::abs(base - k.eval(s.t, s.x, s.ys_alt));
      log_rhs += k.holder * std::log(d / s.t);
    } else {
      const double d = norm_diff(s.x, s.x_alt);
      lhs = std::abs(base - k.eval(s.t, s.x_alt, s.ys));
      log_rhs += k.holder * std::log(d / s.t);
    }
    const double ratio = lhs == 0.0 ? 0.0 : std::exp(std::log(lhs) - log_rhs);
    if (ratio > rep.max_ratio) {
      rep.max_ratio = ratio;
      rep.witness = s;
    }
  }
  rep.pass = rep.max_ratio <= k.constant;
  return rep;
}

// --- application ------------------------------------------------------------------

namespace {

GridSpec union_grid(const GridSpec& eval, std::span<const SampledFunction> f) {
  const int n = eval.dim();
  std::vector<double> lo = eval.lo, hi(n);
  for (int a = 0; a < n; ++a) hi[a] = eval.hi(a);
  for (const auto& fi : f) {
    for (int a = 0; a < n; ++a) {
      lo[a] = std::min(lo[a], fi.grid().lo[a]);
      hi[a] = std::max(hi[a], fi.grid().hi(a));
    }
  }
  std::vector<std::int64_t> cells(n);
  for (int a = 0; a < n; ++a) cells[a] = std::llround((hi[a] - lo[a]) / eval.h);
  return GridSpec(lo, cells, eval.h);
}

SampledFunction restrict_to(const SampledFunction& f, const GridSpec& target) {
  const int n = target.dim();
  std::vector<std::int64_t> offset(n), idx(n);
  for (int a = 0; a < n; ++a) offset[a] = std::llround((target.lo[a] - f.grid().lo[a]) / target.h);
  std::vector<Complex> v(target.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    target.unflatten(i, idx);
    for (int a = 0; a < n; ++a) idx[a] += offset[a];
    v[i] = f[f.grid().flat(idx)];
  }
  return SampledFunction(target, std::move(v));
}

}  // namespace

SampledFunction apply_theta(const KernelFamily& k, double t, std::span<const SampledFunction> f,
                            const GridSpec& eval_grid, const ApplyOptions& opt) {
  k.validate();
  if (static_cast<int>(f.size()) != k.m) throw InvalidArgument("apply_theta needs m input functions");
  const double h = eval_grid.h;
  if (t < opt.c_res * h) {
    throw ResolutionError("scale t = " + std::to_string(t) + " below c_res * h = " + std::to_string(opt.c_res * h));
  }
  for (const auto& fi : f) {
    if (fi.grid().dim() != k.n || eval_grid.dim() != k.n) throw InvalidArgument("dimension mismatch");
    if (fi.grid().h != h) throw InvalidArgument("inputs must share the evaluation spacing");
    for (int a = 0; a < k.n; ++a) {
      const double off = (fi.grid().lo[a] - eval_grid.lo[a]) / h;
      if (std::abs(off - std::round(off)) > 1e-9) throw AlignmentError("input grid is not cell-aligned with the evaluation grid");
    }
  }

  bool fast = opt.use_factors && !k.factors.empty();
  for (const auto& fac : k.factors) fast = fast && std::isfinite(fac.radius);

  if (fast) {
    const GridSpec u = union_grid(eval_grid, f);
    const int n = k.n;
    std::vector<Complex> prod(eval_grid.size(), Complex(1.0, 0.0));
    for (int i = 0; i < k.m; ++i) {
      const auto& fac = k.factors[i];
      const double tn = std::pow(t, -n);
      std::int64_t span_cells = 0;
      for (auto c : u.cells) span_cells = std::max(span_cells, c);
      const double radius = std::min(fac.radius * t, static_cast<double>(span_cells) * h);
      const Stencil st = radial_stencil(n, h, radius, [&](double r) { return tn * fac.profile(r / t); });
      const SampledFunction conv = convolve(f[i].embedded(u), st, opt.exec);
      const SampledFunction part = restrict_to(conv, eval_grid);
      for (std::size_t c = 0; c < prod.size(); ++c) prod[c] *= part[c];
    }
    return SampledFunction(eval_grid, std::move(prod));
  }

  std::vector<SupportSamples> slots;
  for (const auto& fi : f) slots.push_back(support_samples(fi));
  auto values = tensor_theta(k.eval, t, eval_grid, slots, opt.exec);
  return SampledFunction(eval_grid, std::move(values));
}

// --- Theta_t(1, ..., 1) --------------------------------------------------------------

namespace {

// Cell edges on [0, R]: width 1/8 up to 4, then growing by 1.2.
std::vector<double> graded_edges(double radius) {
  std::vector<double> e{0.0};
  double w = 0.125;
  while (e.back() < radius) {
    double next = e.back() + w;
    if (e.back() >= 4.0) {
      w *= 1.2;
      next = e.back() + w;
    }
    e.push_back(std::min(next, radius));
  }
  return e;
}

struct Nodes1D {
  std::vector<double> x, w3, w2;  // GL3 nodes/weights; GL2 nodes and weights stored separately
  std::vector<double> x2;
};

Nodes1D symmetric_nodes(double radius) {
  const auto edges = graded_edges(radius);
  const auto& g3 = gauss_legendre(3);
  const auto& g2 = gauss_legendre(2);
  Nodes1D out;
  for (int side = -1; side <= 1; side += 2) {
    for (std::size_t c = 0; c + 1 < edges.size(); ++c) {
      const double a = side * edges[c], b = side * edges[c + 1];
      const double mid = 0.5 * (a + b), half = 0.5 * std::abs(b - a);
      for (int j = 0; j < 3; ++j) {
        out.x.push_back(mid + half * g3.nodes[j]);
        out.w3.push_back(half * g3.weights[j]);
      }
      for (int j = 0; j < 2; ++j) {
        out.x2.push_back(mid + half * g2.nodes[j]);
        out.w2.push_back(half * g2.weights[j]);
      }
    }
  }
  return out;
}

// Tensor sum over all m*n coordinates of theta at y = x + t u.
Complex tensor_ones(const KernelFamily& k, double t, std::span<const double> x,
                    const std::vector<double>& nodes, const std::vector<double>& weights) {
  const int dims = k.m * k.n;
  const std::size_t p = nodes.size();
  double total_points = std::pow(static_cast<double>(p), dims);
  if (total_points > 4e8) throw ResourceError("tensor quadrature for Theta_t(1) too large");
  std::vector<std::size_t> pick(dims, 0);
  std::vector<double> ys(dims);
  Complex acc{};
  const double jac = std::pow(t, dims);
  while (true) {
    double w = jac;
    for (int d = 0; d < dims; ++d) {
      ys[d] = x[d % k.n] + t * nodes[pick[d]];
      w *= weights[pick[d]];
    }
    acc += k.eval(t, x, ys) * w;
    int d = dims - 1;
    while (d >= 0 && ++pick[d] == p) {
      pick[d] = 0;
      --d;
    }
    if (d < 0) break;
  }
  return acc;
}

}  // namespace

ThetaOnes theta_on_ones(const KernelFamily& k, double t, std::span<const double> x,
                        double eps_tail) {
  k.validate();
  if (!(t > 0.0)) throw InvalidArgument("t must be positive");
  if (!(eps_tail > 0.0)) throw InvalidArgument("tail budget must be positive");
  const int m = k.m, n = k.n;
  const double excess = k.exponent() - n;
  const double omega = sphere_area(n);
  // per-slot full integral of C (1+r)^{-s} and the tail beyond rho
  const double full = k.constant * omega * std::beta(static_cast<double>(n), excess);
  const double factor = k.constant * omega * m * std::pow(full, m - 1) / excess;
  double rho = std::pow(factor / eps_tail, 1.0 / excess) - 1.0;
  rho = std::max(rho, 8.0);
  ThetaOnes out;
  out.tail_radius = rho;
  out.tail_bound = factor * std::pow(1.0 + rho, -excess);

  if (!k.factors.empty()) {
    // product of radial integrals omega int g(r) r^{n-1} dr (t cancels)
    const auto edges = graded_edges(rho);
    const auto& g3 = gauss_legendre(3);
    const auto& g2 = gauss_legendre(2);
    Complex prod3(1.0, 0.0), prod2(1.0, 0.0);
    for (const auto& fac : k.factors) {
      const double lim = std::min(rho, fac.radius);
      double s3 = 0.0, s2 = 0.0;
      for (std::size_t c = 0; c + 1 < edges.size() && edges[c] < lim; ++c) {
        const double a = edges[c], b = std::min(edges[c + 1], lim);
        const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
        for (int j = 0; j < 3; ++j) {
          const double r = mid + half * g3.nodes[j];
          s3 += half * g3.weights[j] * fac.profile(r) * std::pow(r, n - 1);
        }
        for (int j = 0; j < 2; ++j) {
          const double r = mid + half * g2.nodes[j];
          s2 += half * g2.weights[j] * fac.profile(r) * std::pow(r, n - 1);
        }
      }
      // n = 1: the "sphere" is two points, omega = 2 already accounts for both sides
      prod3 *= omega * s3;
      prod2 *= omega * s2;
    }
    out.value = prod3;
    out.quadrature_estimate = std::abs(prod3 - prod2);
    return out;
  }

  const Nodes1D nodes = symmetric_nodes(rho);
  out.value = tensor_ones(k, t, x, nodes.x, nodes.w3);
  out.quadrature_estimate = std::abs(out.value - tensor_ones(k, t, x, nodes.x2, nodes.w2));
  return out;
}

}  // namespace mltb
