#include "mltb/paraproduct.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mltb/errors.hpp"

namespace mltb {

namespace {

void require_grid(const SampledFunction& f, const GridSpec& g) {
  if (!(f.grid() == g)) throw InvalidArgument("inputs must live on the grid of beta");
}

double norm2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

Paraproduct::Paraproduct(SampledFunction beta, int m, ScaleGrid scales, MollifierSpec psi,
                         MollifierSpec phi, Exec exec)
    : beta_(std::move(beta)), m_(m), scales_(scales), phi_(std::move(phi)), exec_(exec) {
  if (m < 1) throw InvalidArgument("paraproduct needs m >= 1");
  if (find_profile(phi_.profile).normalization != Normalization::unit_mass) {
    throw InvalidArgument("phi must be a unit-mass profile");
  }
  const CalderonResult c = calderon_normalize(psi, beta_.grid().dim());
  psi_ = c.spec;
  calderon_c_ = c.constant;
  q2beta_.reserve(scales_.size());
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    q2beta_.push_back(scale_convolve(beta_, psi_, scales_[k], 2, exec_));
  }
}

SampledFunction Paraproduct::eval(std::span<const SampledFunction> f) const {
  if (static_cast<int>(f.size()) != m_) throw InvalidArgument("paraproduct needs m inputs");
  for (const auto& fi : f) require_grid(fi, beta_.grid());
  std::vector<Complex> acc(beta_.size());
  const double w = scales_.weight();
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    const double t = scales_[k];
    SampledFunction prod = q2beta_[k];
    for (const auto& fi : f) prod = prod * scale_convolve(fi, phi_, t, 1, exec_);
    const SampledFunction lt = scale_convolve(prod, psi_, t, 1, exec_);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += w * lt[i];
  }
  return SampledFunction(beta_.grid(), std::move(acc));
}

Complex Paraproduct::pairing_by_duality(std::span<const SampledFunction> f,
                                        const SampledFunction& g) const {
  if (static_cast<int>(f.size()) != m_) throw InvalidArgument("paraproduct needs m inputs");
  for (const auto& fi : f) require_grid(fi, beta_.grid());
  require_grid(g, beta_.grid());
  Complex s{};
  const double w = scales_.weight();
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    const double t = scales_[k];
    SampledFunction prod = q2beta_[k];
    for (const auto& fi : f) prod = prod * scale_convolve(fi, phi_, t, 1, exec_);
    s += w * pairing(prod, scale_convolve(g, psi_, t, 1, exec_));
  }
  return s;
}

double Paraproduct::kernel(std::span<const double> x, std::span<const double> ys) const {
  const int dim = n();
  if (x.size() != static_cast<std::size_t>(dim) || ys.size() != static_cast<std::size_t>(m_ * dim)) {
    throw InvalidArgument("kernel needs x in R^n and m points y_i");
  }
  bool diagonal = true;
  for (int i = 0; i < m_; ++i) {
    if (norm2(x, ys.subspan(i * dim, dim)) > 0.0) diagonal = false;
  }
  if (diagonal) throw DomainError("kernel is singular on the diagonal x = y_1 = ... = y_m");

  const Profile& pp = find_profile(psi_.profile);
  const Profile& fp = find_profile(phi_.profile);
  const GridSpec& g = beta_.grid();
  const double vol = g.cell_volume();
  const double w = scales_.weight();
  std::vector<std::int64_t> first(dim), last(dim), idx(dim);
  std::vector<double> u(dim);
  double total = 0.0;
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    const double t = scales_[k];
    const double tn = std::pow(t, -dim);
    // psi_t(x - .) is negligible beyond pp.radius * t; the u-sum runs over that box
    bool empty = false;
    for (int a = 0; a < dim; ++a) {
      const double r = pp.radius * t;
      first[a] = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor((x[a] - r - g.lo[a]) / g.h)));
      last[a] = std::min<std::int64_t>(g.cells[a], static_cast<std::int64_t>(std::ceil((x[a] + r - g.lo[a]) / g.h)));
      if (first[a] >= last[a]) empty = true;
    }
    if (empty) continue;
    const SampledFunction& q2 = q2beta_[k];
    double s = 0.0;
    idx.assign(first.begin(), first.end());
    while (true) {
      const std::size_t f = g.flat(idx);
      const double qb = q2[f].real();
      if (qb != 0.0) {
        for (int a = 0; a < dim; ++a) u[a] = g.lo[a] + (static_cast<double>(idx[a]) + 0.5) * g.h;
        double v = psi_.amplitude * tn * pp.value(norm2(x, u) / t, dim) * qb;
        for (int i = 0; i < m_ && v != 0.0; ++i) {
          v *= phi_.amplitude * tn * fp.value(norm2(u, ys.subspan(i * dim, dim)) / t, dim);
        }
        s += v;
      }
      int a = dim - 1;
      while (a >= 0 && ++idx[a] == last[a]) {
        idx[a] = first[a];
        --a;
      }
      if (a < 0) break;
    }
    total += s * vol * w;
  }
  return total;
}

CancellationReport test_cancellation(const Paraproduct& p, const SampledFunction& phi_test) {
  const GridSpec& g = p.beta().grid();
  require_grid(phi_test, g);
  // remove the mean on the support so the test function stays compactly supported
  std::size_t support = 0;
  for (const auto& v : phi_test.values()) support += v != Complex{} ? 1 : 0;
  if (support == 0) throw InvalidArgument("test function is zero");
  const Complex mean = integral(phi_test) / (static_cast<double>(support) * g.cell_volume());
  std::vector<Complex> corrected(phi_test.size());
  for (std::size_t i = 0; i < corrected.size(); ++i) {
    corrected[i] = phi_test[i] != Complex{} ? phi_test[i] - mean : Complex{};
  }
  const SampledFunction phi(g, std::move(corrected));
  const double l1 = lp_norm(phi, 1.0);
  if (std::abs(integral(phi)) > 1e-12 * l1) throw DomainError("test function mean did not vanish");

  CancellationReport rep;
  rep.phi_mean_correction = std::abs(mean);
  const SampledFunction ones = SampledFunction::constant(g, 1.0);
  std::vector<SampledFunction> args(p.m(), ones);
  rep.pairing = pairing(p.eval(args), phi);
  rep.target = pairing(p.beta(), phi);
  rep.pairing_error = std::abs(rep.pairing - rep.target);
  rep.relative_error = std::abs(rep.target) > 0.0 ? rep.pairing_error / std::abs(rep.target)
                                                  : (rep.pairing_error > 0.0 ? kInfinity : 0.0);
  for (int i = 0; i < p.m(); ++i) {
    std::vector<SampledFunction> a(p.m(), ones);
    a[i] = phi;
    rep.transpose_residuals.push_back(std::abs(integral(p.eval(a))));
  }
  rep.transpose_scale = p.beta().max_abs() * l1;
  return rep;
}

CzSweepReport cz_sweep(const Paraproduct& p, std::span<const double> centre, double d_lo,
                       double d_hi, std::size_t count, double gamma, double budget,
                       std::uint64_t seed) {
  const int dim = p.n(), m = p.m();
  if (centre.size() != static_cast<std::size_t>(dim)) throw InvalidArgument("centre has wrong dimension");
  if (!(d_lo > 0.0 && d_hi >= d_lo)) throw InvalidArgument("need 0 < d_lo <= d_hi");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw InvalidArgument("gamma must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  auto normal = [&] {
    return std::sqrt(-2.0 * std::log(unit())) * std::cos(2.0 * M_PI * unit());
  };
  auto direction = [&](std::vector<double>& v) {
    double s = 0.0;
    for (auto& c : v) {
      c = normal();
      s += c * c;
    }
    s = std::sqrt(s);
    for (auto& c : v) c /= s;
  };

  CzSweepReport rep;
  rep.gamma = gamma;
  rep.budget = budget;
  const double mn = static_cast<double>(m * dim);
  std::vector<double> x(dim), xp(dim), ys(m * dim), dir(dim), share(m);
  for (std::size_t s = 0; s < count; ++s) {
    const double d = d_lo * std::pow(d_hi / d_lo, unit());
    for (int a = 0; a < dim; ++a) x[a] = centre[a] + d * (unit() - 0.5);
    double total = 0.0;
    for (auto& c : share) total += (c = unit());
    for (int i = 0; i < m; ++i) {
      direction(dir);
      for (int a = 0; a < dim; ++a) ys[i * dim + a] = x[a] + d * share[i] / total * dir[a];
    }
    const double lx = p.kernel(x, ys);
    const double size = std::abs(lx) * std::pow(d, mn);
    if (size > rep.size_constant || rep.witness_size.empty()) {
      rep.size_constant = std::max(rep.size_constant, size);
      rep.witness_size.assign(x.begin(), x.end());
      rep.witness_size.insert(rep.witness_size.end(), ys.begin(), ys.end());
    }
    const double delta = d * 0.5 * std::pow(1e-2, unit());
    direction(dir);
    for (int a = 0; a < dim; ++a) xp[a] = x[a] + delta * dir[a];
    const double reg = std::abs(lx - p.kernel(xp, ys)) * std::pow(d, mn + gamma) / std::pow(delta, gamma);
    if (reg > rep.regularity_constant || rep.witness_reg.empty()) {
      rep.regularity_constant = std::max(rep.regularity_constant, reg);
      rep.witness_reg.assign(x.begin(), x.end());
      rep.witness_reg.insert(rep.witness_reg.end(), xp.begin(), xp.end());
      rep.witness_reg.insert(rep.witness_reg.end(), ys.begin(), ys.end());
    }
    ++rep.samples;
  }
  rep.pass = std::isfinite(rep.size_constant) && std::isfinite(rep.regularity_constant) &&
             rep.size_constant <= budget && rep.regularity_constant <= budget;
  return rep;
}

TbReport tb_condition(const MultilinearOperator& op, std::span<const PseudoAccretiveSystem> systems,
                      const DyadicCube& q, double q_exp, const ScaleGrid& scales,
                      const GridSpec& grid, const MollifierSpec& psi, const MollifierSpec& phi,
                      double budget) {
  if (!op) throw InvalidArgument("operator is not set");
  if (systems.empty()) throw InvalidArgument("need at least one system");
  if (!(q_exp > 0.0)) throw InvalidArgument("exponent q must be positive");
  if (!grid.cube_inside(q)) throw DomainError("grid does not contain Q");
  TbReport rep;
  rep.budget = budget;
  rep.q_below_two = q_exp < 2.0;

  std::vector<SampledFunction> b;
  for (const auto& s : systems) b.push_back(s.generate(q, grid));
  const int n = grid.dim();
  std::vector<std::int64_t> first(n), last(n);
  grid.cube_cells(q, first, last);

  std::vector<double> acc(grid.size(), 0.0);
  const double w = scales.weight();
  for (std::size_t k : scales.within(0.0, q.side())) {
    const double t = scales[k];
    std::vector<SampledFunction> pb;
    for (const auto& bi : b) pb.push_back(smooth_approx(bi, t, phi));
    const SampledFunction tv = op(pb);
    if (!(tv.grid() == grid)) throw InvalidArgument("operator returned a function on another grid");
    const SampledFunction qt = lp_projection(tv, t, psi);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::norm(qt[i]) * w;
    ++rep.scales_used;
  }
  double s = 0.0;
  std::vector<std::int64_t> idx(first.begin(), first.end());
  while (true) {
    s += std::pow(acc[grid.flat(idx)], 0.5 * q_exp);
    int a = n - 1;
    while (a >= 0 && ++idx[a] == last[a]) {
      idx[a] = first[a];
      --a;
    }
    if (a < 0) break;
  }
  rep.value = s * grid.cell_volume() / q.measure();
  rep.pass = std::isfinite(rep.value) && rep.value <= budget;
  return rep;
}

}  // namespace mltb
