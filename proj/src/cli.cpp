#include "mltb/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "mltb/accretive.hpp"
#include "mltb/avgops.hpp"
#include "mltb/carleson.hpp"
#include "mltb/errors.hpp"
#include "mltb/kernels.hpp"
#include "mltb/paraproduct.hpp"
#include "mltb/sqfn.hpp"
#include "mltb/stopping.hpp"

namespace mltb {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// --- config access ---------------------------------------------------------------

std::string child(const std::string& ptr, const std::string& key) { return ptr + "/" + key; }

const json& require(const json& j, const std::string& ptr, const std::string& key) {
  if (!j.is_object()) throw ConfigError(ptr, "expected an object");
  if (!j.contains(key)) throw ConfigError(child(ptr, key), "missing required field");
  return j.at(key);
}

double number(const json& j, const std::string& ptr, const std::string& key,
              std::optional<double> fallback = std::nullopt) {
  if (!j.is_object()) throw ConfigError(ptr, "expected an object");
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(child(ptr, key), "missing required field");
  }
  const json& v = j.at(key);
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf") return kInfinity;
  }
  if (!v.is_number()) throw ConfigError(child(ptr, key), "expected a number");
  return v.get<double>();
}

long long integer(const json& j, const std::string& ptr, const std::string& key,
                  std::optional<long long> fallback = std::nullopt) {
  if (!j.is_object()) throw ConfigError(ptr, "expected an object");
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(child(ptr, key), "missing required field");
  }
  const json& v = j.at(key);
  if (!v.is_number_integer()) throw ConfigError(child(ptr, key), "expected an integer");
  return v.get<long long>();
}

std::string text(const json& j, const std::string& ptr, const std::string& key,
                 std::optional<std::string> fallback = std::nullopt) {
  if (!j.is_object()) throw ConfigError(ptr, "expected an object");
  if (!j.contains(key)) {
    if (fallback) return *fallback;
    throw ConfigError(child(ptr, key), "missing required field");
  }
  const json& v = j.at(key);
  if (!v.is_string()) throw ConfigError(child(ptr, key), "expected a string");
  return v.get<std::string>();
}

// A scalar broadcast to n entries, or an array of exactly n numbers.
std::vector<double> point(const json& v, const std::string& ptr, int n) {
  if (v.is_number()) return std::vector<double>(n, v.get<double>());
  if (!v.is_array() || static_cast<int>(v.size()) != n) {
    throw ConfigError(ptr, "expected a number or an array of " + std::to_string(n) + " numbers");
  }
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number()) throw ConfigError(ptr + "/" + std::to_string(i), "expected a number");
    out.push_back(v[i].get<double>());
  }
  return out;
}

Exec exec_of(const json& c) {
  const std::string e = text(c, "", "exec", "parallel");
  if (e == "parallel") return Exec::parallel;
  if (e == "serial") return Exec::serial;
  throw ConfigError("/exec", "expected \"serial\" or \"parallel\"");
}

DyadicCube cube_of(const json& j, const std::string& ptr) {
  const int g = static_cast<int>(integer(j, ptr, "generation"));
  const json& c = require(j, ptr, "corner");
  if (!c.is_array() || c.empty()) throw ConfigError(child(ptr, "corner"), "expected a nonempty integer array");
  std::vector<std::int64_t> k;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (!c[i].is_number_integer()) throw ConfigError(child(ptr, "corner") + "/" + std::to_string(i), "expected an integer");
    k.push_back(c[i].get<std::int64_t>());
  }
  const GenerationRange range;
  if (g < range.min_generation || g > range.max_generation) {
    throw ConfigError(child(ptr, "generation"), "outside the supported generation range");
  }
  return DyadicCube(g, std::move(k));
}

double spacing(const json& j, const std::string& ptr, const std::string& key) {
  const double h = number(j, ptr, key);
  int e = 0;
  if (!(h > 0.0) || std::frexp(h, &e) != 0.5) throw ConfigError(child(ptr, key), "must be a positive power of two");
  return h;
}

ScaleGrid scales_of(const json& c, const std::string& key = "scales") {
  const std::string ptr = "/" + key;
  const json& s = require(c, "", key);
  const double lo = number(s, ptr, "t_min"), hi = number(s, ptr, "t_max");
  const long long k = integer(s, ptr, "per_octave");
  try {
    return ScaleGrid(lo, hi, static_cast<int>(k));
  } catch (const InvalidArgument& e) {
    throw ConfigError(ptr, e.what());
  }
}

GridSpec window_of(const json& c, int n, const std::string& key = "window") {
  const std::string ptr = "/" + key;
  const json& w = require(c, "", key);
  const double h = spacing(w, ptr, "h");
  const std::vector<double> lo = point(require(w, ptr, "lo"), child(ptr, "lo"), n);
  const std::vector<double> hi = point(require(w, ptr, "hi"), child(ptr, "hi"), n);
  std::vector<std::int64_t> cells(n);
  for (int a = 0; a < n; ++a) {
    const double k = (hi[a] - lo[a]) / h;
    if (!(k >= 1.0) || k != std::floor(k)) throw ConfigError(ptr, "hi - lo must be a positive multiple of h");
    cells[a] = static_cast<std::int64_t>(k);
  }
  return GridSpec(lo, cells, h);
}

KernelFamily kernel_of(const json& c) {
  const json& k = require(c, "", "kernel");
  KernelParams p;
  p.m = static_cast<int>(integer(k, "/kernel", "m", 1));
  p.n = static_cast<int>(integer(k, "/kernel", "n", 1));
  p.decay = number(k, "/kernel", "decay", 2.0);
  p.holder = number(k, "/kernel", "holder", 1.0);
  p.constant = number(k, "/kernel", "constant", 1.0);
  const std::string name = text(k, "/kernel", "name");
  try {
    return builtin_kernel(name, p);
  } catch (const InvalidArgument& e) {
    throw ConfigError("/kernel", e.what());
  }
}

// {"slots": [{"q": .., "cubes": [{"generation": .., "corner": [..], "path": ..}, ..]}, ..]}
std::vector<PseudoAccretiveSystem> system_from_files(const json& s) {
  const json& slots = require(s, "/system", "slots");
  if (!slots.is_array() || slots.empty()) throw ConfigError("/system/slots", "expected a nonempty array");
  std::vector<PseudoAccretiveSystem> out;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const std::string ptr = "/system/slots/" + std::to_string(i);
    const double q = number(slots[i], ptr, "q");
    if (!(q > 0.0)) throw ConfigError(child(ptr, "q"), "must be positive");
    const json& cubes = require(slots[i], ptr, "cubes");
    if (!cubes.is_array() || cubes.empty()) throw ConfigError(child(ptr, "cubes"), "expected a nonempty array");
    std::map<DyadicCube, SampledFunction> table;
    for (std::size_t j = 0; j < cubes.size(); ++j) {
      const std::string cp = child(ptr, "cubes") + "/" + std::to_string(j);
      const DyadicCube cube = cube_of(cubes[j], cp);
      try {
        table.emplace(cube, load_function(text(cubes[j], cp, "path")));
      } catch (const std::exception& e) {
        throw ConfigError(child(cp, "path"), e.what());
      }
    }
    out.push_back(system_from_functions(static_cast<int>(i), q, std::move(table)));
  }
  return out;
}

std::vector<PseudoAccretiveSystem> system_of(const json& c) {
  const json& s = require(c, "", "system");
  if (s.is_object() && s.contains("slots")) return system_from_files(s);
  SystemParams p;
  p.m = static_cast<int>(integer(s, "/system", "m", 2));
  p.n = static_cast<int>(integer(s, "/system", "n", 1));
  p.q = number(s, "/system", "q", 2.0);
  p.first_slot = static_cast<int>(integer(s, "/system", "first_slot", 0));
  try {
    return builtin_system(text(s, "/system", "name"), p);
  } catch (const InvalidArgument& e) {
    throw ConfigError("/system", e.what());
  }
}

MollifierSpec mollifier_of(const json& c, const std::string& key, const std::string& profile) {
  MollifierSpec m;
  m.profile = profile;
  if (!c.contains(key)) return m;
  const std::string ptr = "/" + key;
  const json& j = c.at(key);
  m.profile = text(j, ptr, "profile", profile);
  m.amplitude = number(j, ptr, "amplitude", 1.0);
  m.coarse_cells = static_cast<int>(integer(j, ptr, "coarse_cells", 0));
  m.c_res = number(j, ptr, "c_res", 4.0);
  try {
    find_profile(m.profile);
  } catch (const InvalidArgument& e) {
    throw ConfigError(child(ptr, "profile"), e.what());
  }
  return m;
}

// Test functions by kind; `lambda` dilates about the origin.
SampledFunction function_of(const json& j, const std::string& ptr, const GridSpec& grid,
                            double lambda = 1.0) {
  const int n = grid.dim();
  const std::string kind = text(j, ptr, "kind");
  auto dist2 = [n](std::span<const double> x, const std::vector<double>& c) {
    double s = 0.0;
    for (int a = 0; a < n; ++a) s += (x[a] - c[a]) * (x[a] - c[a]);
    return s;
  };
  if (kind == "file") {
    SampledFunction f = load_function(text(j, ptr, "path"));
    try {
      return f.embedded(grid);
    } catch (const std::exception& e) {
      throw ConfigError(child(ptr, "path"), e.what());
    }
  }
  std::vector<double> centre = point(j.contains("centre") ? j.at("centre") : json(0.0), child(ptr, "centre"), n);
  for (auto& v : centre) v *= lambda;
  if (kind == "gaussian") {
    const double w = number(j, ptr, "width", 1.0) * lambda;
    const double amp = number(j, ptr, "amplitude", 1.0);
    return SampledFunction::sample(grid, [=](std::span<const double> x) {
      return Complex(amp * std::exp(-dist2(x, centre) / (w * w)), 0.0);
    });
  }
  if (kind == "bump" || kind == "mean_zero_bump") {
    const double r = number(j, ptr, "radius", 1.0) * lambda;
    const double amp = number(j, ptr, "height", 1.0);
    const bool odd = kind == "mean_zero_bump";
    return SampledFunction::sample(grid, [=](std::span<const double> x) {
      const double u = dist2(x, centre) / (r * r);
      if (u >= 1.0) return Complex{};
      const double b = amp * std::pow(1.0 - u, 4);
      return Complex(odd ? b * (x[0] - centre[0]) / r : b, 0.0);
    });
  }
  if (kind == "indicator") {
    std::vector<double> lo = point(require(j, ptr, "lo"), child(ptr, "lo"), n);
    std::vector<double> hi = point(require(j, ptr, "hi"), child(ptr, "hi"), n);
    for (int a = 0; a < n; ++a) {
      lo[a] *= lambda;
      hi[a] *= lambda;
    }
    return SampledFunction::sample(grid, [=](std::span<const double> x) {
      for (int a = 0; a < n; ++a) {
        if (x[a] < lo[a] || x[a] >= hi[a]) return Complex{};
      }
      return Complex(1.0, 0.0);
    });
  }
  throw ConfigError(child(ptr, "kind"), "unknown function kind '" + kind + "'");
}

// --- report values -----------------------------------------------------------------

ordered_json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

ordered_json cplx(Complex z) { return ordered_json::array({num(z.real()), num(z.imag())}); }

ordered_json cube_json(const DyadicCube& q) {
  ordered_json j;
  j["generation"] = q.generation;
  j["corner"] = q.corner;
  j["side"] = num(q.side());
  return j;
}

ordered_json list(std::span<const double> v) {
  ordered_json a = ordered_json::array();
  for (double x : v) a.push_back(num(x));
  return a;
}

std::vector<double> cube_row(const DyadicCube& q) {
  std::vector<double> r{static_cast<double>(q.generation)};
  for (auto k : q.corner) r.push_back(static_cast<double>(k));
  r.push_back(q.side());
  return r;
}

std::vector<std::string> cube_header(int n) {
  std::vector<std::string> h{"generation"};
  for (int a = 0; a < n; ++a) h.push_back("k" + std::to_string(a));
  h.push_back("side");
  return h;
}

std::vector<std::string> checks_of(const json& c, std::vector<std::string> all) {
  if (!c.contains("checks")) return all;
  const json& v = c.at("checks");
  if (!v.is_array()) throw ConfigError("/checks", "expected an array of check names");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_string() || std::find(all.begin(), all.end(), v[i].get<std::string>()) == all.end()) {
      throw ConfigError("/checks/" + std::to_string(i), "unknown check");
    }
    out.push_back(v[i].get<std::string>());
  }
  return out;
}

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

ordered_json condition_json(const ConditionReport& r) {
  ordered_json j;
  j["root"] = cube_json(r.root);
  j["m"] = r.m;
  j["q_slots"] = list(r.q_slots);
  j["q"] = r.q.str();
  j["h"] = num(r.h);
  j["floor"] = num(r.floor);
  j["cubes_checked"] = r.cubes_checked;
  j["b1"] = num(r.b1);
  j["b1_slots"] = list(r.b1_slots);
  ordered_json means = ordered_json::array();
  for (auto z : r.slot_means) means.push_back(cplx(z));
  j["slot_means"] = means;
  j["a"] = cplx(r.a);
  j["b2"] = num(r.b2);
  j["b3"] = num(r.b3_compat);
  ordered_json w;
  w["cube"] = cube_json(r.b3_witness);
  w["numerator"] = cplx(r.witness_numerator);
  ordered_json wm = ordered_json::array();
  for (auto z : r.witness_slot_means) wm.push_back(cplx(z));
  w["slot_means"] = wm;
  j["b3_witness"] = w;
  j["pass_b1"] = r.pass_b1;
  j["pass_b2"] = r.pass_b2;
  j["pass_b3"] = r.pass_b3;
  return j;
}

double finite_diff(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) return a == b ? 0.0 : kInfinity;
  return std::abs(a - b);
}

// --- subcommands ---------------------------------------------------------------------

ExperimentResult run_check_system(const json& c) {
  const auto systems = system_of(c);
  const DyadicCube q = cube_of(require(c, "", "cube"), "/cube");
  const double h = spacing(c, "", "h");
  const double floor = number(c, "", "floor", std::min(8.0 * h, q.side()));
  ConditionBudgets b;
  if (c.contains("budgets")) {
    const json& bj = c.at("budgets");
    b.b1 = number(bj, "/budgets", "b1", kInfinity);
    b.b2 = number(bj, "/budgets", "b2", kInfinity);
    b.b3 = number(bj, "/budgets", "b3", kInfinity);
  }
  const auto checks = checks_of(c, {"b1", "b2", "b3"});
  if (q.dim() != systems[0].n) throw ConfigError("/cube/corner", "cube dimension differs from the system");
  if (floor < h) throw ConfigError("/floor", "floor must be >= h");
  const Exec exec = exec_of(c);
  const ConditionReport r = check_system(systems, q, h, floor, b, exec);

  ExperimentResult out;
  out.report["result"] = condition_json(r);
  bool pass_cancel = true;
  if (c.contains("kernel")) {
    // the Theta_t cancellation budget, kept apart from the compatibility B3
    const KernelFamily k = kernel_of(c);
    if (k.m != r.m || k.n != q.dim()) throw ConfigError("/kernel", "kernel m, n must match the system");
    const ScaleGrid scales = scales_of(c);
    ApplyOptions opt;
    opt.exec = exec;
    const double budget = c.contains("budgets") ? number(c.at("budgets"), "/budgets", "b3_cancel", kInfinity) : kInfinity;
    const CancelReport cr = check_theta_cancel(k, systems, q, r.q.value(), scales, h, budget,
                                               number(c, "", "margin", 1.0), opt);
    out.report["result"]["b3_cancel"] = {{"kernel", k.name},
                                         {"value", num(cr.value)},
                                         {"budget", num(cr.budget)},
                                         {"t_lo", num(cr.t_lo)},
                                         {"t_hi", num(cr.t_hi)},
                                         {"scales_used", cr.scales_used},
                                         {"pass", cr.pass}};
    pass_cancel = cr.pass;
  }
  // quadrature estimate: the same measurement at twice the cell size
  ordered_json budget;
  if (2.0 * h <= floor) {
    const ConditionReport coarse = check_system(systems, q, 2.0 * h, floor, b, exec);
    budget["b1"] = num(finite_diff(r.b1, coarse.b1));
    budget["a"] = num(std::abs(r.a - coarse.a));
    budget["b3"] = num(finite_diff(r.b3_compat, coarse.b3_compat));
    budget["method"] = "difference against cells of side 2h";
  } else {
    budget["method"] = "none (floor = h)";
  }
  out.report["error_budget"] = budget;
  out.pass = (!has(checks, "b1") || r.pass_b1) && (!has(checks, "b2") || r.pass_b2) &&
             (!has(checks, "b3") || r.pass_b3) && pass_cancel;
  out.report["checks"] = checks;

  CsvTable t{"check_system_slots.csv", {"slot", "q", "b1", "mean_re", "mean_im"}, {}};
  for (int i = 0; i < r.m; ++i) {
    t.rows.push_back({static_cast<double>(i), r.q_slots[i], r.b1_slots[i], r.slot_means[i].real(),
                      r.slot_means[i].imag()});
  }
  out.tables.push_back(std::move(t));
  return out;
}

ExperimentResult run_decompose(const json& c) {
  const auto systems = system_of(c);
  const DyadicCube q = cube_of(require(c, "", "cube"), "/cube");
  const double h = spacing(c, "", "h");
  const double floor = number(c, "", "floor");
  if (q.dim() != systems[0].n) throw ConfigError("/cube/corner", "cube dimension differs from the system");
  if (floor < h) throw ConfigError("/floor", "floor must be >= h");
  std::size_t samples = 1000;
  std::uint64_t seed = static_cast<std::uint64_t>(integer(c, "", "seed", 1));
  if (c.contains("lower_bound")) {
    samples = static_cast<std::size_t>(integer(c.at("lower_bound"), "/lower_bound", "samples", 1000));
  }
  const Exec exec = exec_of(c);
  const SubcubeTable table(systems, q, h, exec);
  const ConditionReport cond = check_system(systems, q, h, floor, {}, exec);
  const Decomposition d = decompose(table, floor);

  ExperimentResult out;
  ordered_json r;
  r["root"] = cube_json(d.root);
  r["a"] = cplx(d.a);
  r["m"] = d.m;
  r["q"] = num(d.q);
  r["b1"] = num(d.b1);
  r["floor"] = num(d.floor);
  r["selected_count"] = d.selected.size();
  r["floor_leaves"] = d.floor_leaves;
  r["exceptional_measure"] = num(d.exceptional_measure);
  const double ratio = d.exceptional_measure / q.measure();
  r["exceptional_fraction"] = num(ratio);
  const double eta_p = d.eta_nominal();
  const double eta_r = d.eta_rigorous(cond.b1_slots, cond.q_slots);
  r["eta_nominal"] = num(eta_p);
  r["eta_rigorous"] = num(eta_r);
  r["pass_eta_nominal"] = ratio >= eta_p;
  r["pass_eta_rigorous"] = ratio >= eta_r;

  const auto sweep = lower_bound_sweep(d, samples, seed);
  const LowerBoundReport lb = verify_lower_bound(d, table, cond.b2, cond.b3_compat, sweep);
  ordered_json l;
  l["samples"] = lb.samples;
  l["seed"] = seed;
  l["b2"] = num(cond.b2);
  l["b3"] = num(cond.b3_compat);
  l["bound_weak"] = num(lb.bound_weak);
  l["bound_strong"] = num(lb.bound_strong);
  l["min_product"] = num(lb.min_product);
  l["margin_weak"] = num(lb.margin_weak());
  l["margin_strong"] = num(lb.margin_strong());
  l["violations_weak"] = lb.violations_weak;
  l["violations_strong"] = lb.violations_strong;
  r["lower_bound"] = l;
  ordered_json sel = ordered_json::array();
  for (const auto& s : d.selected) sel.push_back(cube_json(s));
  r["selected"] = sel;
  out.report["result"] = r;
  ordered_json budget;
  budget["quadrature"] = "3-point Gauss-Legendre per cell of side h";
  budget["resolution_leaves"] = d.floor_leaves;
  out.report["error_budget"] = budget;
  out.pass = ratio >= eta_p && ratio >= eta_r && lb.violations_weak == 0;

  CsvTable t{"decompose_selected.csv", cube_header(q.dim()), {}};
  for (const auto& s : d.selected) t.rows.push_back(cube_row(s));
  out.tables.push_back(std::move(t));
  return out;
}

ExperimentResult run_carleson(const json& c) {
  const KernelFamily k = kernel_of(c);
  const json& fam = require(c, "", "family");
  const DyadicCube root = cube_of(require(fam, "/family", "root"), "/family/root");
  const int gens = static_cast<int>(integer(fam, "/family", "generations", 3));
  if (gens < 1 || gens > 12) throw ConfigError("/family/generations", "expected 1..12");
  if (root.dim() != k.n) throw ConfigError("/family/root/corner", "cube dimension differs from the kernel");
  const double h = spacing(c, "", "h");
  const ScaleGrid scales = scales_of(c);
  const double budget = number(c, "", "budget", 1e-3);
  const double eps_tail = number(c, "", "eps_tail", 1e-10);
  if (root.side() > scales.t_max()) throw ConfigError("/scales/t_max", "must be >= the root side");
  if (std::ldexp(root.side(), -(gens - 1)) < h) throw ConfigError("/h", "finer than the smallest family cube");
  std::vector<DyadicCube> family;
  for (int g = 0; g < gens; ++g) {
    for (const auto& r : descendants(root, g)) family.push_back(r);
  }
  const GridSpec grid = GridSpec::over(root, h);
  const CarlesonReport rep = theta_carleson(k, family, grid, scales, {}, eps_tail);

  ExperimentResult out;
  ordered_json r;
  r["kernel"] = k.name;
  r["family"] = {{"root", cube_json(root)}, {"generations", gens}, {"cubes", family.size()}};
  r["norm"] = num(rep.norm);
  r["witness"] = cube_json(rep.witness);
  r["budget"] = num(budget);
  if (c.value("divergence", false)) {
    const DivergenceTrend dt = carleson_divergence(k, root, h, scales);
    r["divergence"] = {{"masses", list(dt.masses)}, {"increments", list(dt.increments)},
                       {"min_abs_theta", num(dt.min_abs_theta)},
                       {"growth", num(dt.masses.back() - dt.masses.front())},
                       {"log_growth_floor", num(std::log(2.0) * (dt.masses.size() - 1) *
                                                dt.min_abs_theta * dt.min_abs_theta)}};
  }
  out.report["result"] = r;
  double quad = 0.0, tail = 0.0, theta_max = 0.0;
  const auto centre = root.center();
  for (std::size_t j = 0; j < scales.size(); ++j) {
    if (scales[j] > root.side()) break;
    const ThetaOnes th = theta_on_ones(k, scales[j], centre, eps_tail);
    quad = std::max(quad, th.quadrature_estimate);
    tail = std::max(tail, th.tail_bound);
    theta_max = std::max(theta_max, std::abs(th.value));
  }
  const double logs = std::log(root.side() / scales.t_min());
  out.report["error_budget"] = {
      {"theta_quadrature_max", num(quad)},
      {"theta_tail_max", num(tail)},
      {"norm", num((2.0 * theta_max + quad + tail) * (quad + tail) * logs)},
      {"scale_truncation", "tents cut at t_min"}};
  out.pass = rep.norm <= budget;

  CsvTable t{"carleson_tents.csv", cube_header(root.dim()), {}};
  t.header.push_back("normalized_mass");
  for (const auto& m : rep.masses) {
    auto row = cube_row(m.cube);
    row.push_back(m.normalized_mass);
    t.rows.push_back(std::move(row));
  }
  out.tables.push_back(std::move(t));
  return out;
}

ExperimentResult run_sqfn(const json& c) {
  const KernelFamily k = kernel_of(c);
  const json& ex = require(c, "", "exponents");
  const double p = number(ex, "/exponents", "p");
  const json& slots = require(ex, "/exponents", "slots");
  if (!slots.is_array()) throw ConfigError("/exponents/slots", "expected an array");
  std::vector<double> ps;
  for (const auto& v : slots) {
    if (!v.is_number()) throw ConfigError("/exponents/slots", "expected numbers");
    ps.push_back(v.get<double>());
  }
  IndexTuple idx;
  try {
    idx = IndexTuple::make(p, ps);
  } catch (const InvalidArgument& e) {
    throw ConfigError("/exponents", e.what());
  }
  if (static_cast<int>(idx.m()) != k.m) throw ConfigError("/exponents/slots", "need one exponent per kernel slot");
  const ScaleGrid scales = scales_of(c);
  const json& inputs = require(c, "", "inputs");
  if (!inputs.is_array() || static_cast<int>(inputs.size()) != k.m) {
    throw ConfigError("/inputs", "need one input function per kernel slot");
  }
  std::vector<double> dilations{1.0};
  if (c.contains("dilations")) {
    dilations.clear();
    for (const auto& v : c.at("dilations")) {
      const double l = v.is_number() ? v.get<double>() : 0.0;
      int e = 0;
      if (!(l >= 1.0) || std::frexp(l, &e) != 0.5) throw ConfigError("/dilations", "entries must be powers of two >= 1");
      dilations.push_back(l);
    }
    if (dilations.empty()) throw ConfigError("/dilations", "empty");
  }
  const double tolerance = number(c, "", "tolerance", 0.03);
  ApplyOptions opt;
  opt.exec = exec_of(c);

  ExperimentResult out;
  CsvTable t{"sqfn_ratios.csv", {"lambda", "ratio", "s_norm", "tail_budget"}, {}};
  ordered_json rows = ordered_json::array();
  double lo = kInfinity, hi = 0.0, tail = 0.0;
  for (double lambda : dilations) {
    const int oct = static_cast<int>(std::lround(std::log2(lambda)));
    // the window dilates with the data; the spacing stays fixed
    const GridSpec base = window_of(c, k.n);
    std::vector<double> wlo(k.n);
    std::vector<std::int64_t> cells(k.n);
    for (int a = 0; a < k.n; ++a) {
      wlo[a] = base.lo[a] * lambda;
      cells[a] = static_cast<std::int64_t>(std::llround(base.cells[a] * lambda));
    }
    const GridSpec grid(wlo, cells, base.h);
    std::vector<SampledFunction> f;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
      f.push_back(function_of(inputs[i], "/inputs/" + std::to_string(i), grid, lambda));
    }
    const RatioReport r = bound_ratio(k, f, idx, scales.shifted(oct), opt);
    rows.push_back({{"lambda", num(lambda)}, {"ratio", num(r.ratio)}, {"s_norm", num(r.s_norm)},
                    {"input_norms", list(r.input_norms)}, {"t_min", num(r.t_min)},
                    {"t_max", num(r.t_max)}, {"tail_budget", num(r.tail_budget)}});
    t.rows.push_back({lambda, r.ratio, r.s_norm, r.tail_budget});
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
    tail = std::max(tail, r.tail_budget);
  }
  const double spread = hi / lo - 1.0;
  ordered_json r;
  r["kernel"] = k.name;
  r["exponents"] = {{"p", idx.p.str()}, {"slots", [&] {
                      ordered_json a = ordered_json::array();
                      for (const auto& s : idx.slots) a.push_back(s.str());
                      return a;
                    }()}};
  r["dilations"] = rows;
  r["spread"] = num(spread);
  r["tolerance"] = num(tolerance);
  out.report["result"] = r;
  out.report["error_budget"] = {{"tail_max", num(tail)},
                                {"scale_quadrature", "log-midpoint, ln2/K per scale"}};
  out.pass = spread <= tolerance;
  out.tables.push_back(std::move(t));
  return out;
}

struct ParaproductSetup {
  GridSpec grid;
  int m = 2;
  ScaleGrid scales;
  MollifierSpec psi, phi;
  SampledFunction beta;
};

ParaproductSetup paraproduct_of(const json& c) {
  ParaproductSetup s;
  const int n = static_cast<int>(integer(c, "", "n", 1));
  if (n < 1 || n > 3) throw ConfigError("/n", "expected 1..3");
  s.m = static_cast<int>(integer(c, "", "m", 2));
  if (s.m < 1) throw ConfigError("/m", "expected m >= 1");
  s.grid = window_of(c, n);
  s.scales = scales_of(c);
  s.psi = mollifier_of(c, "psi", "mexican_hat");
  s.phi = mollifier_of(c, "phi", "bump4");
  s.beta = function_of(require(c, "", "beta"), "/beta", s.grid);
  return s;
}

ExperimentResult run_paraproduct(const json& c) {
  ParaproductSetup s = paraproduct_of(c);
  const Exec exec = exec_of(c);
  std::optional<Paraproduct> pp;
  try {
    pp.emplace(s.beta, s.m, s.scales, s.psi, s.phi, exec);
  } catch (const InvalidArgument& e) {
    throw ConfigError("/psi", e.what());
  }
  const Paraproduct& p = *pp;
  const SampledFunction phi_test = function_of(require(c, "", "phi_test"), "/phi_test", s.grid);
  const double rel_tol = number(c, "", "pairing_tolerance", 0.05);
  const double tr_tol = number(c, "", "transpose_tolerance", 1e-3);
  const CancellationReport cr = test_cancellation(p, phi_test);

  const json cz = c.contains("cz") ? c.at("cz") : json::object();
  std::vector<double> centre;
  for (int a = 0; a < s.grid.dim(); ++a) centre.push_back(0.5 * (s.grid.lo[a] + s.grid.hi(a)));
  if (cz.contains("centre")) centre = point(cz.at("centre"), "/cz/centre", s.grid.dim());
  const CzSweepReport z = cz_sweep(p, centre, number(cz, "/cz", "d_lo", 0.5), number(cz, "/cz", "d_hi", 8.0),
                                   static_cast<std::size_t>(integer(cz, "/cz", "count", 200)),
                                   number(cz, "/cz", "gamma", 1.0), number(cz, "/cz", "budget", kInfinity),
                                   static_cast<std::uint64_t>(integer(c, "", "seed", 1)));

  ExperimentResult out;
  ordered_json r;
  r["m"] = s.m;
  r["calderon_constant"] = num(p.calderon_constant());
  r["psi_amplitude"] = num(p.psi().amplitude);
  r["pairing"] = cplx(cr.pairing);
  r["target"] = cplx(cr.target);
  r["pairing_error"] = num(cr.pairing_error);
  r["relative_error"] = num(cr.relative_error);
  r["pairing_tolerance"] = num(rel_tol);
  r["transpose_residuals"] = list(cr.transpose_residuals);
  r["transpose_scale"] = num(cr.transpose_scale);
  r["transpose_tolerance"] = num(tr_tol);
  r["phi_mean_correction"] = num(cr.phi_mean_correction);
  r["cz"] = {{"samples", z.samples},
             {"gamma", num(z.gamma)},
             {"size_constant", num(z.size_constant)},
             {"regularity_constant", num(z.regularity_constant)},
             {"budget", num(z.budget)},
             {"witness_size", list(z.witness_size)},
             {"witness_regularity", list(z.witness_reg)},
             {"pass", z.pass}};
  out.report["result"] = r;

  // the window plays the role of the cutoff radius R: the discarded part decays like t_max / R
  double reach = kInfinity;
  std::vector<double> x(s.grid.dim());
  for (std::size_t i = 0; i < phi_test.size(); ++i) {
    if (phi_test[i] == Complex{}) continue;
    s.grid.center(i, x);
    for (int a = 0; a < s.grid.dim(); ++a) {
      reach = std::min({reach, x[a] - s.grid.lo[a], s.grid.hi(a) - x[a]});
    }
  }
  out.report["error_budget"] = {{"window_tail", num(cr.transpose_scale * s.scales.t_max() / std::max(reach, s.grid.h))},
                                {"scale_range", {num(s.scales.t_min()), num(s.scales.t_max())}}};
  bool ok = cr.relative_error <= rel_tol && z.pass;
  for (double v : cr.transpose_residuals) ok = ok && v <= tr_tol * cr.transpose_scale;
  out.pass = ok;

  CsvTable t{"paraproduct_transpose.csv", {"slot", "residual", "scale"}, {}};
  for (std::size_t i = 0; i < cr.transpose_residuals.size(); ++i) {
    t.rows.push_back({static_cast<double>(i), cr.transpose_residuals[i], cr.transpose_scale});
  }
  out.tables.push_back(std::move(t));
  return out;
}

ExperimentResult run_tb_condition(const json& c) {
  const auto systems = system_of(c);
  const DyadicCube q = cube_of(require(c, "", "cube"), "/cube");
  const double q_exp = number(c, "", "q", 2.0);
  const double budget = number(c, "", "budget", kInfinity);
  const double factor = number(c, "", "operator_scale", 1.0);
  const std::string op_name = text(c, "", "operator", "paraproduct");
  const int n = systems[0].n;
  if (q.dim() != n) throw ConfigError("/cube/corner", "cube dimension differs from the system");
  const GridSpec grid = window_of(c, n);
  if (!grid.cube_inside(q)) throw ConfigError("/window", "must contain the cube on the dyadic lattice");
  const ScaleGrid scales = scales_of(c);
  const MollifierSpec psi = mollifier_of(c, "psi", "mexican_hat");
  const MollifierSpec phi = mollifier_of(c, "phi", "bump4");
  const Exec exec = exec_of(c);

  MultilinearOperator op;
  std::optional<Paraproduct> pp;
  if (op_name == "zero") {
    op = [&grid](std::span<const SampledFunction>) { return SampledFunction::zeros(grid); };
  } else if (op_name == "paraproduct") {
    const SampledFunction beta = function_of(require(c, "", "beta"), "/beta", grid);
    pp.emplace(beta, static_cast<int>(systems.size()), scales, psi, phi, exec);
    op = [&pp, factor](std::span<const SampledFunction> f) { return pp->eval(f).scaled(factor); };
  } else {
    throw ConfigError("/operator", "expected \"paraproduct\" or \"zero\"");
  }
  const MollifierSpec q_spec = pp ? pp->psi() : psi;
  const TbReport r = tb_condition(op, systems, q, q_exp, scales, grid, q_spec, phi, budget);

  ExperimentResult out;
  ordered_json j;
  j["operator"] = op_name;
  j["operator_scale"] = num(factor);
  j["cube"] = cube_json(q);
  j["q"] = num(q_exp);
  j["value"] = num(r.value);
  j["budget"] = num(r.budget);
  j["scales_used"] = r.scales_used;
  j["q_below_two"] = r.q_below_two;
  if (r.q_below_two) j["warning"] = "the Tb condition is stated for q >= 2";
  out.report["result"] = j;
  out.report["error_budget"] = {{"scale_quadrature", "log-midpoint, ln2/K per scale"},
                                {"scales_below_side", r.scales_used}};
  out.pass = r.pass;
  return out;
}

void write_csv_table(const CsvTable& t, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw ResourceError("cannot write " + path.string());
  for (std::size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
  os << '\n';
  char buf[64];
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      os << (i ? "," : "") << buf;
    }
    os << '\n';
  }
}

}  // namespace

std::vector<std::string> subcommands() {
  return {"check-system", "decompose", "carleson", "sqfn", "paraproduct", "tb-condition"};
}

ExperimentResult run_experiment(const std::string& subcommand, const json& config) {
  if (!config.is_object()) throw ConfigError("", "config must be a JSON object");
  ExperimentResult r;
  try {
    if (subcommand == "check-system") r = run_check_system(config);
    else if (subcommand == "decompose") r = run_decompose(config);
    else if (subcommand == "carleson") r = run_carleson(config);
    else if (subcommand == "sqfn") r = run_sqfn(config);
    else if (subcommand == "paraproduct") r = run_paraproduct(config);
    else if (subcommand == "tb-condition") r = run_tb_condition(config);
    else throw ConfigError("", "unknown subcommand '" + subcommand + "'");
  } catch (const AlignmentError& e) {
    throw ConfigError("", e.what());
  }
  ordered_json report;
  report["schema_version"] = kReportSchemaVersion;
  report["subcommand"] = subcommand;
  report["pass"] = r.pass;
  for (auto& [key, value] : r.report.items()) report[key] = value;
  report["config"] = config;
  r.report = std::move(report);
  return r;
}

std::string dump_report(const ordered_json& report) { return report.dump(2) + "\n"; }

void write_result(const std::string& subcommand, const ExperimentResult& result,
                  const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / (subcommand + "_report.json"), std::ios::binary);
  if (!os) throw ResourceError("cannot write into " + out_dir);
  os << dump_report(result.report);
  for (const auto& t : result.tables) write_csv_table(t, dir / t.name);
}

int cli_main(int argc, char** argv) {
  CLI::App app{"Multilinear Tb experiment runner"};
  app.require_subcommand(1);
  std::string config_path, out_dir = ".";
  for (const auto& name : subcommands()) {
    auto* sub = app.add_subcommand(name, "run the " + name + " experiment");
    sub->add_option("--config", config_path, "JSON config file")->required();
    sub->add_option("--out", out_dir, "output directory");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  json config;
  {
    std::ifstream is(config_path);
    if (!is) {
      std::cerr << "error: cannot open config " << config_path << "\n";
      return 2;
    }
    try {
      config = json::parse(is);
    } catch (const json::parse_error& e) {
      std::cerr << "error: " << config_path << ": " << e.what() << "\n";
      return 2;
    }
  }
  ExperimentResult result;
  try {
    result = run_experiment(subcommand, config);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const InvalidArgument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::runtime_error& e) {
    // numerical preconditions that fail on valid input are check failures
    result.report = ordered_json{{"schema_version", kReportSchemaVersion},
                                 {"subcommand", subcommand},
                                 {"pass", false},
                                 {"error", e.what()},
                                 {"config", config}};
    result.pass = false;
  }
  try {
    write_result(subcommand, result, out_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  if (result.report.contains("result") && result.report["result"].contains("warning")) {
    std::cerr << "warning: " << result.report["result"]["warning"].get<std::string>() << "\n";
  }
  std::cout << subcommand << ": " << (result.pass ? "pass" : "FAIL") << "\n";
  return result.pass ? 0 : 1;
}

}  // namespace mltb
