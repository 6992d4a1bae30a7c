// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/gen.hpp"
#include "mltb/accretive.hpp"
#include "mltb/avgops.hpp"
#include "mltb/carleson.hpp"
#include "mltb/cli.hpp"
#include "mltb/dyadic.hpp"
#include "mltb/errors.hpp"
#include "mltb/sqfn.hpp"
#include "mltb/stopping.hpp"

using namespace mltb;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

json load_config(const std::string& stem) {
  std::ifstream is(std::string(MLTB_SOURCE_DIR) + "/configs/" + stem + ".json");
  if (!is) throw std::runtime_error("missing config " + stem);
  return json::parse(is);
}

// 1. worked examples ---------------------------------------------------------------

Outcome worked_examples() {
  testgen::Gen gen(101);
  const auto alt = builtin_system("alternating", {2, 1, 2.0});
  double worst = 0.0;
  for (int it = 0; it < 20; ++it) {
    const DyadicCube q = gen.cube(1, -3, 4, -8, 8);
    const auto rep = check_system(alt, q, q.side() / 64, q.side() / 8);
    for (const auto& mean : rep.slot_means) worst = std::max(worst, std::abs(mean - Complex(0.5)));
  }
  const auto nc = builtin_system("noncompatible", {2, 1, 2.0});
  const DyadicCube q02(-1, {0});
  const auto rep = check_system(nc, q02, 1.0 / 1024, 1.0 / 64);
  const double integral = std::abs(rep.slot_means[0]) * q02.measure();
  const Rational numerator = Rational::from_double(rep.witness_numerator.real());
  const bool ok = worst < 1e-14 && std::abs(integral - 1.0) < 1e-14 && std::isinf(rep.b3_compat) &&
                  rep.b3_witness == DyadicCube(0, {0}) && numerator == Rational(1, 12);
  return {ok, fmt("max |mean - 1/2| = %.1e over 20 cubes; |int b| = %.15g; witness [%g,%g) numerator %s",
                  worst, integral, rep.b3_witness.lower(0), rep.b3_witness.upper(0), numerator.str().c_str())};
}

// 2 and 3. stopping time ---------------------------------------------------------

struct Instance {
  std::vector<PseudoAccretiveSystem> systems;
  DyadicCube root;
  double h = 0.0;
  double floor = 0.0;
  std::string label;
};

// characteristic and gaussian in n = 1, 2; alternating per slot (m = 1) in n = 1.
std::vector<Instance> stopping_instances(int roots) {
  testgen::Gen gen(202);
  std::vector<Instance> out;
  for (const std::string name : {"characteristic", "gaussian", "alternating"}) {
    for (double q : {2.0, 4.0}) {
      for (int m : {1, 2}) {
        for (int r = 0; r < roots; ++r) {
          Instance in;
          const int n = name == "alternating" ? 1 : 1 + r % 2;
          in.root = gen.cube(n, -3, 3, -6, 6);
          in.h = in.root.side() / (n == 1 ? 256 : 32);
          in.floor = in.root.side() / (n == 1 ? 32 : 8);
          SystemParams p{m, n, q};
          if (name == "alternating") {
            p.m = 1;
            p.first_slot = r % 2;
            in.systems = builtin_system(name, p);
            if (m == 2) {
              // both slots at once: the product mean vanishes
              in.label = "alternating-m2";
            }
          } else {
            in.systems = builtin_system(name, p);
          }
          if (in.label.empty()) in.label = name;
          out.push_back(std::move(in));
        }
      }
    }
  }
  return out;
}

Outcome eta_bound() {
  std::size_t checked = 0, violations = 0, rejected = 0;
  double min_slack = kInfinity;
  for (const auto& in : stopping_instances(50)) {
    if (in.label == "alternating-m2") {
      try {
        decompose(builtin_system("alternating", {2, 1, 2.0}), in.root, in.h, in.floor);
        ++violations;
      } catch (const DomainError&) {
        ++rejected;
      }
    }
    const auto d = decompose(in.systems, in.root, in.h, in.floor);
    const double ratio = d.exceptional_measure / in.root.measure();
    const double eta = d.eta_nominal();
    ++checked;
    if (ratio < eta) ++violations;
    min_slack = std::min(min_slack, ratio - eta);
  }
  return {violations == 0, fmt("%zu decompositions, %zu violations, min |E|/|Q| - eta = %.4g; "
                               "%zu alternating m=2 instances rejected (a = 0)",
                               checked, violations, min_slack, rejected)};
}

Outcome lower_bound() {
  std::size_t instances = 0, samples = 0, weak = 0, strong = 0;
  double min_margin = kInfinity;
  const auto all = stopping_instances(5);
  for (std::size_t i = 0; i < all.size(); ++i) {
    const auto& in = all[i];
    const SubcubeTable table(in.systems, in.root, in.h);
    const auto d = decompose(table, in.floor);
    const auto rep = check_system(in.systems, in.root, in.h, in.floor);
    const auto pts = lower_bound_sweep(d, 1000, 500 + i);
    const auto lb = verify_lower_bound(d, table, rep.b2, rep.b3_compat, pts);
    ++instances;
    samples += lb.samples;
    weak += lb.violations_weak;
    strong += lb.violations_strong;
    min_margin = std::min(min_margin, lb.margin_weak());
  }
  return {weak == 0 && samples == instances * 1000,
          fmt("%zu instances x 1000 samples, %zu violations (strong form: %zu), min margin %.4g", instances, weak,
              strong, min_margin)};
}

// 4. telescoping -----------------------------------------------------------------

Outcome telescoping() {
  testgen::Gen gen(404);
  double worst = 0.0;
  int runs = 0;
  for (int m : {2, 3}) {
    for (int it = 0; it < 10; ++it) {
      const int n = 1 + it % 2;
      const GridSpec g = GridSpec::box(n, -2, 2, n == 1 ? 1.0 / 64 : 1.0 / 16);
      std::vector<SampledFunction> f;
      for (int i = 0; i < m; ++i) f.push_back(gen.function(g));
      const double t = std::ldexp(1.0, -gen.integer(-1, 1));
      MollifierSpec spec{it % 3 == 0 ? "gauss" : "bump4"};
      const auto e = error_split(f, t, spec);
      auto sum = SampledFunction::zeros(g);
      for (const auto& x : e) sum = sum + x;
      const auto diff = multilinear_average(f, t) - multilinear_smooth(f, t, spec);
      worst = std::max(worst, lp_norm(sum - diff, kInfinity));
      ++runs;
    }
  }
  return {worst <= 1e-12, fmt("%d instances, max |A - P - sum E| = %.2e", runs, worst)};
}

// 5. Calderon reproducing formula ---------------------------------------------

Outcome calderon() {
  const GridSpec g = GridSpec::box(1, -128, 128, 1.0 / 256);
  const auto f = SampledFunction::sample(g, [](auto x) { return Complex(std::exp(-x[0] * x[0]), 0.0); });
  MollifierSpec psi{"mexican_hat"};
  psi.coarse_cells = 16;
  psi = calderon_normalize(psi, 1).spec;
  auto error = [&](int k) {
    const auto r = reproduce(f, ScaleGrid(1.0 / 64, 64.0, k), psi);
    return lp_norm(r - f, 2.0) / lp_norm(f, 2.0);
  };
  const double e8 = error(8), e16 = error(16);
  const double ratio = e16 / e8;
  const bool ok = e8 <= 0.02 && ratio >= 0.5 * 0.7 && ratio <= 0.5 * 1.3;
  return {ok, fmt("relative L2 error %.4g at K=8 (limit 0.02), %.4g at K=16, ratio %.3f (want 0.35..0.65)", e8, e16,
                  ratio)};
}

// 6. Carleson norms ----------------------------------------------------------------

Outcome carleson() {
  const KernelParams p{2, 1, 2.0, 1.0, 10.0};
  const GridSpec g = GridSpec::box(1, 0, 1, 1.0 / 128);
  const ScaleGrid s(1.0 / 32, 1.0, 4);
  std::vector<DyadicCube> family;
  for (int gen = 0; gen < 3; ++gen)
    for (const auto& c : descendants(DyadicCube(0, {0}), gen)) family.push_back(c);
  const double cancel = theta_carleson(builtin_kernel("cancelling", p), family, g, s).norm;
  const auto trend = carleson_divergence(builtin_kernel("normalized", p), DyadicCube(0, {0}), 1.0 / 128, s);
  const int octaves = static_cast<int>(trend.masses.size());
  const double growth = trend.masses.back() - trend.masses.front();
  const double floor = std::log(2.0) * (octaves - 1) * trend.min_abs_theta * trend.min_abs_theta;
  return {cancel <= 1e-3 && growth >= floor,
          fmt("cancelling norm %.3g (limit 1e-3) over %zu cubes; non-cancelling growth %.15g >= %.15g over %d octaves",
              cancel, family.size(), growth, floor, octaves)};
}

// 7. Whitney ------------------------------------------------------------------------

Outcome whitney_props() {
  testgen::Gen gen(707);
  std::size_t sets = 0, bad = 0;
  double max_ratio = 0.0;
  for (int n : {1, 2}) {
    const int count = n == 1 ? 100 : 20;
    for (int it = 0; it < count; ++it) {
      const CellMask m = gen.open_set(n, 5, n == 1 ? 256 : 48, gen.integer(1, 4));
      const auto w = whitney(m);
      const WhitneyCheck chk = check_whitney(m, w.cubes);
      ++sets;
      if (!chk.ok()) ++bad;
      max_ratio = std::max(max_ratio, w.max_distance_ratio);
    }
  }
  return {bad == 0, fmt("%zu random open sets, %zu with violations; max dist/(sqrt(n) l) = %.3f", sets, bad, max_ratio)};
}

// 8. scaling covariance ------------------------------------------------------------

Outcome scaling() {
  const auto k = builtin_kernel("gaussian", {2, 1, 2.0, 1.0, 10.0});
  const auto idx = IndexTuple::make(2.0, {4.0, 4.0});
  const ScaleGrid base(0.25, 4.0, 8);
  std::vector<double> ratios;
  for (int e = 0; e <= 2; ++e) {
    const double lambda = std::ldexp(1.0, e);
    const GridSpec g = GridSpec::box(1, -40 * lambda, 40 * lambda, 1.0 / 16);
    auto gauss = [&](double c, double w) {
      return SampledFunction::sample(g, [=](auto x) {
        const double u = (x[0] / lambda - c) / w;
        return Complex(std::exp(-u * u), 0.0);
      });
    };
    const std::vector<SampledFunction> f{gauss(0.0, 1.0), gauss(1.0, 2.0)};
    ratios.push_back(bound_ratio(k, f, idx, base.shifted(e)).ratio);
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  const double spread = (*hi - *lo) / *lo;
  return {spread <= 0.03, fmt("ratios %.10g %.10g %.10g, spread %.2e (limit 0.03)", ratios[0], ratios[1], ratios[2],
                              spread)};
}

// 9. paraproduct -------------------------------------------------------------------

Outcome paraproduct() {
  const auto r = run_experiment("paraproduct", load_config("paraproduct_bump"));
  const json& res = r.report["result"];
  const double err = res["pairing_error"].get<double>();
  const double target = std::hypot(res["target"][0].get<double>(), res["target"][1].get<double>());
  const double scale = res["transpose_scale"].get<double>();
  double residual = 0.0;
  for (const auto& v : res["transpose_residuals"]) residual = std::max(residual, v.get<double>());
  const json& cz = res["cz"];
  const bool ok = err <= 0.05 * target && residual <= 1e-3 * scale && cz["pass"].get<bool>();
  return {ok, fmt("pairing error %.3g = %.2f%% of |<beta,phi>|; transpose residual %.2e (limit %.2e); "
                  "CZ size %.4g, regularity %.4g (budget %g)",
                  err, 100 * err / target, residual, 1e-3 * scale, cz["size_constant"].get<double>(),
                  cz["regularity_constant"].get<double>(), cz["budget"].get<double>())};
}

// 10. determinism ------------------------------------------------------------------

Outcome determinism() {
  const std::vector<std::pair<std::string, std::string>> runs{
      {"check-system", "check_alternating"}, {"check-system", "check_noncompatible"},
      {"decompose", "decompose_gaussian"},   {"carleson", "carleson_cancelling"},
      {"carleson", "carleson_gaussian"},     {"sqfn", "sqfn_scaling"},
      {"paraproduct", "paraproduct_bump"},   {"tb-condition", "tb_paraproduct"},
  };
  std::vector<std::string> mismatched;
  for (const auto& [sub, stem] : runs) {
    const std::string golden = slurp(std::string(MLTB_SOURCE_DIR) + "/tests/golden/" + stem + ".json");
    if (golden.empty() || dump_report(run_experiment(sub, load_config(stem)).report) != golden) mismatched.push_back(stem);
  }
  std::string detail = fmt("%zu golden configs, %zu mismatched", runs.size(), mismatched.size());
  for (const auto& m : mismatched) detail += " " + m;
  return {mismatched.empty(), detail};
}

}  // namespace

int main() {
  struct Criterion {
    std::string name;
    std::function<Outcome()> run;
    double seconds;  // runtime limit, part of the criterion where one is stated
  };
  const std::vector<Criterion> criteria{
      {"worked examples", worked_examples, 1.0},
      {"stopping-time eta bound", eta_bound, 30.0},
      {"average lower bound", lower_bound, kInfinity},
      {"telescoping identity", telescoping, kInfinity},
      {"Calderon reproducing formula", calderon, 60.0},
      {"Carleson norms", carleson, kInfinity},
      {"Whitney properties", whitney_props, kInfinity},
      {"scaling covariance", scaling, kInfinity},
      {"paraproduct", paraproduct, 120.0},
      {"determinism", determinism, kInfinity},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (o.pass && secs > criteria[i].seconds) {
      o.pass = false;
      o.detail += fmt("; over the %.0f s limit", criteria[i].seconds);
    }
    if (!o.pass) ++failed;
    std::printf("%s %2zu %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].name.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
