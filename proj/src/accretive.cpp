#include "mltb/accretive.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "mltb/errors.hpp"

namespace mltb {

namespace {

// Tensor 3-point Gauss-Legendre points/weights on the unit cube [0,1)^n.
struct CellRule {
  std::vector<double> points;  // n per point
  std::vector<double> weights;
};

CellRule cell_rule(int n) {
  const auto& g = gauss_legendre(3);
  CellRule r;
  std::vector<int> pick(n, 0);
  while (true) {
    double w = 1.0;
    for (int a = 0; a < n; ++a) {
      r.points.push_back(0.5 + 0.5 * g.nodes[pick[a]]);
      w *= 0.5 * g.weights[pick[a]];
    }
    r.weights.push_back(w);
    int a = n - 1;
    while (a >= 0 && ++pick[a] == 3) {
      pick[a] = 0;
      --a;
    }
    if (a < 0) break;
  }
  return r;
}

double dist2_to_center(const DyadicCube& q, std::span<const double> x) {
  double s = 0.0;
  for (int a = 0; a < q.dim(); ++a) {
    const double c = std::ldexp(static_cast<double>(q.corner[a]) + 0.5, -q.generation);
    s += (x[a] - c) * (x[a] - c);
  }
  return s;
}

}  // namespace

SampledFunction PseudoAccretiveSystem::generate(const DyadicCube& q, const GridSpec& grid) const {
  if (grid.dim() != q.dim()) throw InvalidArgument("grid and cube dimensions differ");
  const int dim = grid.dim();
  const CellRule rule = cell_rule(dim);
  std::vector<Complex> v(grid.size());
  std::vector<double> lo(dim), x(dim);
  for (std::size_t i = 0; i < v.size(); ++i) {
    grid.center(i, lo);
    for (auto& c : lo) c -= 0.5 * grid.h;
    Complex s{};
    for (std::size_t p = 0; p < rule.weights.size(); ++p) {
      for (int a = 0; a < dim; ++a) x[a] = lo[a] + grid.h * rule.points[p * dim + a];
      s += rule.weights[p] * eval(q, x);
    }
    v[i] = s;
  }
  return SampledFunction(grid, std::move(v));
}

std::vector<std::string> builtin_system_names() {
  return {"characteristic", "gaussian", "poisson", "alternating", "noncompatible"};
}

std::vector<PseudoAccretiveSystem> builtin_system(const std::string& name,
                                                  const SystemParams& params) {
  const int m = params.m, n = params.n;
  if (m < 1 || n < 1) throw InvalidArgument("system needs m >= 1 and n >= 1");
  if (!(params.q > 0.0)) throw InvalidArgument("combined exponent q must be positive");
  const double qi = m * params.q;
  if (!(qi > 1.0)) throw InvalidArgument("slot exponents q_i = m q must exceed 1");
  std::vector<PseudoAccretiveSystem> out;
  for (int i = 0; i < m; ++i) {
    PseudoAccretiveSystem s;
    s.name = name;
    s.slot = i;
    s.n = n;
    s.q = qi;
    out.push_back(std::move(s));
  }
  if (name == "characteristic") {
    for (auto& s : out) {
      s.eval = [](const DyadicCube& q, std::span<const double> x) {
        return Complex(q.contains(x) ? 1.0 : 0.0, 0.0);
      };
    }
  } else if (name == "gaussian") {
    for (auto& s : out) {
      s.eval = [](const DyadicCube& q, std::span<const double> x) {
        const double l = q.side();
        return Complex(std::exp(-dist2_to_center(q, x) / (l * l)), 0.0);
      };
    }
  } else if (name == "poisson") {
    for (auto& s : out) {
      s.eval = [n](const DyadicCube& q, std::span<const double> x) {
        const double l = q.side();
        return Complex(std::pow(l, n + 1) / std::pow(l * l + dist2_to_center(q, x), 0.5 * (n + 1)), 0.0);
      };
    }
  } else if (name == "alternating") {
    if (n != 1) throw InvalidArgument("alternating system is defined for n = 1");
    if (m > 2) throw InvalidArgument("alternating system has two slots");
    for (auto& s : out) {
      const int which = (params.first_slot + s.slot) % 2;
      s.slot = which;
      s.eval = [which](const DyadicCube& q, std::span<const double> x) {
        if (!q.contains(x)) return Complex{};
        const double u = (x[0] - q.lower(0)) / q.side();
        if (which == 0) return Complex(u < 0.75 ? 1.0 : -1.0, 0.0);
        return Complex(u < 0.25 ? -1.0 : 1.0, 0.0);
      };
    }
  } else if (name == "noncompatible") {
    if (n != 1) throw InvalidArgument("noncompatible system is defined for n = 1");
    for (auto& s : out) {
      s.eval = [](const DyadicCube& q, std::span<const double> x) {
        if (!q.contains(x)) return Complex{};
        return Complex(2.0 * (x[0] - q.lower(0)) / q.side() - 0.5, 0.0);
      };
    }
  } else {
    throw InvalidArgument("unknown system '" + name + "'");
  }
  return out;
}

PseudoAccretiveSystem system_from_functions(int slot, double q,
                                            std::map<DyadicCube, SampledFunction> table) {
  if (table.empty()) throw InvalidArgument("system table is empty");
  PseudoAccretiveSystem s;
  s.name = "table";
  s.slot = slot;
  s.q = q;
  s.n = table.begin()->first.dim();
  auto shared = std::make_shared<const std::map<DyadicCube, SampledFunction>>(std::move(table));
  s.eval = [shared](const DyadicCube& cube, std::span<const double> x) {
    auto it = shared->find(cube);
    if (it == shared->end()) throw InvalidArgument("no stored function for the requested cube");
    return it->second.at(x);
  };
  return s;
}

// --- SubcubeTable -------------------------------------------------------------------

SubcubeTable::SubcubeTable(std::span<const PseudoAccretiveSystem> systems,
                           const DyadicCube& root, double h, Exec exec)
    : root_(root), m_(static_cast<int>(systems.size())), h_(h) {
  if (systems.empty()) throw InvalidArgument("need at least one system");
  const int n = root.dim();
  for (const auto& s : systems) {
    if (s.n != n) throw InvalidArgument("system dimension differs from cube dimension");
    q_.push_back(s.q);
  }
  const double ratio = root.side() / h;
  int e = 0;
  if (!(ratio >= 1.0) || std::frexp(ratio, &e) != 0.5) {
    throw AlignmentError("cube side / h must be a power of two >= 1");
  }
  depth_ = e - 1;
  if (static_cast<double>(n) * depth_ > 26) throw ResourceError("subcube table too deep");

  const CellRule rule = cell_rule(n);
  const std::size_t leaves = std::size_t{1} << (n * depth_);
  const std::int64_t per_axis = std::int64_t{1} << depth_;
  std::vector<Complex> leaf_prod(leaves), leaf_slot(leaves * m_);
  std::vector<double> leaf_power(leaves * m_);

  auto integrate_leaf = [&](std::size_t leaf, std::vector<double>& x, std::vector<double>& lo) {
    std::size_t r = leaf;
    for (int a = n - 1; a >= 0; --a) {
      const auto k = static_cast<std::int64_t>(r % static_cast<std::size_t>(per_axis));
      r /= static_cast<std::size_t>(per_axis);
      lo[a] = root.lower(a) + static_cast<double>(k) * h;
    }
    const double vol = std::pow(h, n);
    Complex prod_sum{};
    for (std::size_t p = 0; p < rule.weights.size(); ++p) {
      for (int a = 0; a < n; ++a) x[a] = lo[a] + h * rule.points[p * n + a];
      const double w = rule.weights[p] * vol;
      Complex prod(1.0, 0.0);
      for (int i = 0; i < m_; ++i) {
        const Complex b = systems[i].eval(root, x);
        prod *= b;
        leaf_slot[leaf * m_ + i] += w * b;
        leaf_power[leaf * m_ + i] += w * std::pow(std::abs(b), systems[i].q);
      }
      prod_sum += w * prod;
    }
    leaf_prod[leaf] = prod_sum;
  };

  const auto leaves_i = static_cast<std::int64_t>(leaves);
  if (exec == Exec::serial) {
    std::vector<double> x(n), lo(n);
    for (std::int64_t l = 0; l < leaves_i; ++l) integrate_leaf(static_cast<std::size_t>(l), x, lo);
  } else {
#pragma omp parallel
    {
      std::vector<double> x(n), lo(n);
#pragma omp for schedule(static)
      for (std::int64_t l = 0; l < leaves_i; ++l) integrate_leaf(static_cast<std::size_t>(l), x, lo);
    }
  }

  power_.assign(m_, 0.0);
  for (std::size_t l = 0; l < leaves; ++l) {
    for (int i = 0; i < m_; ++i) power_[i] += leaf_power[l * m_ + i];
  }
  for (auto& p : power_) p /= root.measure();

  product_.resize(depth_ + 1);
  slots_.resize(depth_ + 1);
  product_[depth_] = std::move(leaf_prod);
  slots_[depth_] = std::move(leaf_slot);
  std::vector<std::int64_t> k(n);
  for (int d = depth_ - 1; d >= 0; --d) {
    const std::int64_t side = std::int64_t{1} << d;
    const std::size_t count = std::size_t{1} << (n * d);
    product_[d].assign(count, Complex{});
    slots_[d].assign(count * m_, Complex{});
    for (std::size_t c = 0; c < count; ++c) {
      std::size_t r = c;
      for (int a = n - 1; a >= 0; --a) {
        k[a] = static_cast<std::int64_t>(r % static_cast<std::size_t>(side));
        r /= static_cast<std::size_t>(side);
      }
      for (std::size_t ch = 0; ch < (std::size_t{1} << n); ++ch) {
        std::size_t f = 0;
        for (int a = 0; a < n; ++a) {
          const std::int64_t kc = 2 * k[a] + static_cast<std::int64_t>((ch >> (n - 1 - a)) & 1u);
          f = f * static_cast<std::size_t>(2 * side) + static_cast<std::size_t>(kc);
        }
        product_[d][c] += product_[d + 1][f];
        for (int i = 0; i < m_; ++i) slots_[d][c * m_ + i] += slots_[d + 1][f * m_ + i];
      }
    }
  }
}

std::size_t SubcubeTable::index(const DyadicCube& r, int& level) const {
  level = r.generation - root_.generation;
  if (level < 0 || level > depth_ || !root_.contains(r)) {
    throw InvalidArgument("cube is not a tabulated subcube of the root");
  }
  std::size_t f = 0;
  const std::int64_t side = std::int64_t{1} << level;
  for (int a = 0; a < r.dim(); ++a) {
    f = f * static_cast<std::size_t>(side) +
        static_cast<std::size_t>(r.corner[a] - (root_.corner[a] << level));
  }
  return f;
}

Complex SubcubeTable::product_average(const DyadicCube& r) const {
  int level = 0;
  const std::size_t f = index(r, level);
  return product_[level][f] / r.measure();
}

Complex SubcubeTable::slot_average(int i, const DyadicCube& r) const {
  int level = 0;
  const std::size_t f = index(r, level);
  return slots_[level][f * m_ + i] / r.measure();
}

// --- check_system -----------------------------------------------------------------

namespace {

int floor_depth(const DyadicCube& q, double h, double floor) {
  if (!(floor >= h)) throw InvalidArgument("floor must be >= h");
  const double ratio = q.side() / floor;
  int e = 0;
  if (!(ratio >= 1.0) || std::frexp(ratio, &e) != 0.5) {
    throw AlignmentError("cube side / floor must be a power of two >= 1");
  }
  return e - 1;
}

}  // namespace

ConditionReport check_system(std::span<const PseudoAccretiveSystem> systems, const DyadicCube& q,
                             double h, double floor, const ConditionBudgets& budgets, Exec exec) {
  const int df = floor_depth(q, h, floor);
  const SubcubeTable table(systems, q, h, exec);
  const int m = table.m();

  ConditionReport rep;
  rep.root = q;
  rep.m = m;
  rep.floor = floor;
  rep.h = h;
  std::vector<double> qs;
  for (const auto& s : systems) qs.push_back(s.q);
  rep.q_slots = qs;
  rep.q = harmonic_combination(qs);

  double scale = 1.0;
  for (int i = 0; i < m; ++i) {
    const double p = table.power_average(i);
    rep.b1_slots.push_back(p);
    rep.b1 = std::max(rep.b1, p);
    rep.slot_means.push_back(table.slot_average(i, q));
    scale *= std::pow(p, 1.0 / systems[i].q);
  }
  const double zero = kZeroTolerance * std::max(scale, 1e-300);
  rep.a = table.product_average(q);
  rep.b2 = std::abs(rep.a) > zero ? 1.0 / std::abs(rep.a) : kInfinity;

  rep.b3_witness = q;
  bool have_witness = false;
  for (int d = 0; d <= df; ++d) {
    for (const auto& r : descendants(q, d)) {
      ++rep.cubes_checked;
      const Complex num = table.product_average(r);
      double den = 1.0;
      bool den_zero = false;
      std::vector<Complex> means;
      for (int i = 0; i < m; ++i) {
        const Complex mi = table.slot_average(i, r);
        means.push_back(mi);
        if (std::abs(mi) <= std::pow(zero, 1.0 / m)) den_zero = true;
        den *= std::abs(mi);
      }
      double ratio = 0.0;
      if (std::abs(num) <= zero) ratio = 0.0;
      else if (den_zero) ratio = kInfinity;
      else ratio = std::abs(num) / den;
      if (!have_witness || ratio > rep.b3_compat) {
        rep.b3_compat = ratio;
        rep.b3_witness = r;
        rep.witness_numerator = num;
        rep.witness_slot_means = means;
        have_witness = true;
      }
    }
  }
  // budgets are met up to rounding in the quadrature sums
  auto within = [](double v, double budget) { return std::isfinite(v) && v <= budget * (1.0 + kZeroTolerance); };
  rep.pass_b1 = within(rep.b1, budgets.b1);
  rep.pass_b2 = within(rep.b2, budgets.b2);
  rep.pass_b3 = within(rep.b3_compat, budgets.b3);
  return rep;
}

CancelReport check_theta_cancel(const KernelFamily& k,
                                std::span<const PseudoAccretiveSystem> systems,
                                const DyadicCube& q, double q_exp, const ScaleGrid& scales,
                                double h, double budget, double margin, const ApplyOptions& opt) {
  if (static_cast<int>(systems.size()) != k.m) throw InvalidArgument("need m systems");
  if (!(q_exp > 0.0)) throw InvalidArgument("exponent q must be positive");
  const int n = q.dim();
  const double l = q.side();
  const double pad = std::ceil(margin * l / h) * h;
  std::vector<double> lo(n);
  std::vector<std::int64_t> cells(n);
  for (int a = 0; a < n; ++a) {
    lo[a] = q.lower(a) - pad;
    cells[a] = std::llround((l + 2.0 * pad) / h);
  }
  const GridSpec window(lo, cells, h);
  const GridSpec inner = GridSpec::over(q, h);
  std::vector<SampledFunction> b;
  for (const auto& s : systems) b.push_back(s.generate(q, window));

  CancelReport rep;
  rep.budget = budget;
  std::vector<double> acc(inner.size(), 0.0);
  const double w = scales.weight();
  for (std::size_t j : scales.within(0.0, l)) {
    const double t = scales[j];
    const SampledFunction th = apply_theta(k, t, b, inner, opt);
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += std::norm(th[i]) * w;
    if (rep.scales_used == 0) rep.t_lo = t;
    rep.t_hi = t;
    ++rep.scales_used;
  }
  double s = 0.0;
  for (double v : acc) s += std::pow(v, 0.5 * q_exp);
  rep.value = s * inner.cell_volume() / q.measure();
  rep.pass = std::isfinite(rep.value) && rep.value <= budget;
  return rep;
}

}  // namespace mltb
