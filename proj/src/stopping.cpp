#include "mltb/stopping.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mltb/errors.hpp"

namespace mltb {

namespace {

double conjugate(double q) {
  if (!(q > 1.0)) throw DomainError("conjugate exponent needs q > 1");
  return q / (q - 1.0);
}

DyadicCube cube_at(std::span<const double> x, int g) {
  std::vector<std::int64_t> k(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    k[a] = static_cast<std::int64_t>(std::floor(std::ldexp(x[a], g)));
  }
  return DyadicCube(g, std::move(k));
}

struct Descent {
  const SubcubeTable& table;
  Complex a;
  int floor_level = 0;
  std::vector<DyadicCube> selected;
  std::size_t floor_leaves = 0;

  void visit(const DyadicCube& r, int level) {
    const Complex ratio = table.product_average(r) / a;
    if (ratio.real() <= 0.5) {
      selected.push_back(r);
      return;
    }
    if (level == floor_level) {
      ++floor_leaves;
      return;
    }
    for (const auto& c : r.children()) visit(c, level + 1);
  }
};

}  // namespace

double Decomposition::tau(std::span<const double> x) const {
  if (!root.contains(x) || selected.empty()) return 0.0;
  // selected is sorted by generation first
  const int g_lo = selected.front().generation;
  const int g_hi = selected.back().generation;
  for (int g = g_lo; g <= g_hi; ++g) {
    const DyadicCube c = cube_at(x, g);
    if (std::binary_search(selected.begin(), selected.end(), c)) return c.side();
  }
  return 0.0;
}

double Decomposition::eta_nominal() const {
  return std::pow(2.0 * std::pow(std::max(b1, 1.0), m), -conjugate(q));
}

double Decomposition::eta_rigorous(std::span<const double> b1_slots,
                                   std::span<const double> q_slots) const {
  if (b1_slots.size() != q_slots.size()) throw InvalidArgument("slot lists differ in length");
  double prod = 1.0;
  for (std::size_t i = 0; i < b1_slots.size(); ++i) prod *= std::pow(b1_slots[i], 1.0 / q_slots[i]);
  return std::pow(std::abs(a) / (2.0 * prod), conjugate(q));
}

Decomposition decompose(std::span<const PseudoAccretiveSystem> systems, const DyadicCube& q,
                        double h, double floor, Exec exec) {
  if (!(floor >= h)) throw InvalidArgument("floor must be >= h");
  const SubcubeTable table(systems, q, h, exec);
  return decompose(table, floor);
}

Decomposition decompose(const SubcubeTable& table, double floor) {
  const DyadicCube& q = table.root();
  if (!(floor >= table.h())) throw InvalidArgument("floor must be >= h");
  const double ratio = q.side() / floor;
  int e = 0;
  if (!(ratio >= 2.0) || std::frexp(ratio, &e) != 0.5) {
    throw AlignmentError("cube side / floor must be a power of two >= 2");
  }
  const int floor_level = e - 1;

  Decomposition d;
  d.root = q;
  d.floor = floor;
  d.m = table.m();
  std::vector<double> qs;
  double scale = 1.0;
  for (int i = 0; i < table.m(); ++i) {
    qs.push_back(table.exponent(i));
    d.b1 = std::max(d.b1, table.power_average(i));
    scale *= std::pow(table.power_average(i), 1.0 / table.exponent(i));
  }
  d.q = harmonic_combination(qs).value();
  d.a = table.product_average(q);
  if (!(std::abs(d.a) > kZeroTolerance * std::max(scale, 1e-300))) {
    throw DomainError("avg_Q prod b vanishes; the system is not accretive on this cube");
  }

  Descent walk{table, d.a, floor_level, {}, 0};
  for (const auto& c : q.children()) walk.visit(c, 1);
  std::sort(walk.selected.begin(), walk.selected.end());
  d.selected = std::move(walk.selected);
  d.floor_leaves = walk.floor_leaves;

  double covered = 0.0;
  for (const auto& r : d.selected) covered += r.measure();
  d.exceptional_measure = std::max(0.0, q.measure() - covered);
  return d;
}

LowerBoundReport verify_lower_bound(const Decomposition& d, const SubcubeTable& table, double b2,
                                    double b3, std::span<const LowerBoundSample> samples) {
  if (!(table.root() == d.root)) throw InvalidArgument("table and decomposition roots differ");
  const int m = table.m();
  LowerBoundReport rep;
  const double c2 = std::max(b2, 1.0), c3 = std::max(b3, 1.0);
  rep.bound_weak = 1.0 / (2.0 * std::pow(c2, m) * c3);
  rep.bound_strong = 1.0 / (2.0 * c2 * c3);
  // a relative slack of a few ulps keeps exact ties (e.g. 1/4 vs 1/4) from counting
  const double slack = 1.0 - 1e-12;
  for (const auto& s : samples) {
    if (!(s.t > d.tau(s.x))) throw InvalidArgument("sample has t <= tau_Q(x)");
    const DyadicCube r = smallest_containing(s.x, s.t);
    if (!d.root.contains(r) || r.side() < table.h()) {
      throw InvalidArgument("Q(x, t) is outside the root or below the table resolution");
    }
    double prod = 1.0;
    for (int i = 0; i < m; ++i) prod *= std::abs(table.slot_average(i, r));
    ++rep.samples;
    if (prod < rep.bound_weak * slack) ++rep.violations_weak;
    if (prod < rep.bound_strong * slack) ++rep.violations_strong;
    if (prod < rep.min_product) {
      rep.min_product = prod;
      rep.worst = s;
    }
  }
  return rep;
}

std::vector<LowerBoundSample> lower_bound_sweep(const Decomposition& d, std::size_t count,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto unit = [&rng] { return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53; };
  const int n = d.root.dim();
  const double l = d.root.side();
  std::vector<LowerBoundSample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    LowerBoundSample s;
    s.x.resize(n);
    for (int a = 0; a < n; ++a) s.x[a] = d.root.lower(a) + l * unit();
    const double lo = std::max(d.tau(s.x), 0.5 * d.floor);
    s.t = lo * std::pow(l / lo, unit());
    if (!(s.t > lo)) s.t = std::nextafter(lo, l);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace mltb
