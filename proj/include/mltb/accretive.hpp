#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mltb/dyadic.hpp"
#include "mltb/grid.hpp"
#include "mltb/kernels.hpp"
#include "mltb/quadrature.hpp"

namespace mltb {

/// One slot i of a cube-indexed family b_Q^i with exponent q_i.
struct PseudoAccretiveSystem {
  std::string name;
  int slot = 0;
  int n = 1;
  double q = 2.0;
  /// b_Q^i(x); zero outside Q unless the family says otherwise.
  std::function<Complex(const DyadicCube& q, std::span<const double> x)> eval;

  /// Cell averages of b_Q^i on `grid` (3-point Gauss-Legendre per axis per cell).
  SampledFunction generate(const DyadicCube& q, const GridSpec& grid) const;
};

struct SystemParams {
  int m = 2;
  int n = 1;
  double q = 2.0;  // combined exponent; every slot gets q_i = m q
  int first_slot = 0;  // alternating only: which of b^1, b^2 slot 0 carries
};

/// characteristic, gaussian, poisson (any n); alternating (n = 1, m <= 2);
/// noncompatible (n = 1): b_Q = (2(x - a)/l - 1/2) chi_Q, which is (x - 1/2) chi_[0,2) on [0,2).
std::vector<PseudoAccretiveSystem> builtin_system(const std::string& name,
                                                  const SystemParams& params);
std::vector<std::string> builtin_system_names();

/// A slot backed by stored functions keyed by cube; cubes without an entry
/// are an InvalidArgument when evaluated.
PseudoAccretiveSystem system_from_functions(int slot, double q,
                                            std::map<DyadicCube, SampledFunction> table);

/// Integrals over every dyadic subcube R of Q, from Q down to cells of side h,
/// of b_i, prod_i b_i and (at the root) |b_i|^{q_i}.  Leaves are integrated by
/// tensor 3-point Gauss-Legendre, which is exact for piecewise polynomials of
/// degree <= 5 whose breaks fall on cell boundaries.
class SubcubeTable {
 public:
  SubcubeTable(std::span<const PseudoAccretiveSystem> systems, const DyadicCube& root, double h,
               Exec exec = Exec::parallel);

  const DyadicCube& root() const { return root_; }
  int m() const { return m_; }
  int depth() const { return depth_; }  // generations from Q down to side h
  double h() const { return h_; }

  /// R must be a dyadic subcube of Q with side >= h.
  Complex product_average(const DyadicCube& r) const;
  Complex slot_average(int i, const DyadicCube& r) const;
  /// (1/|Q|) int_Q |b_i|^{q_i}
  double power_average(int i) const { return power_[i]; }
  double exponent(int i) const { return q_[i]; }

 private:
  std::size_t index(const DyadicCube& r, int& level) const;

  DyadicCube root_;
  int m_ = 0;
  int depth_ = 0;
  double h_ = 0.0;
  // level-major tables; entry [level][cell] for the product, [level][cell*m + i] for slots
  std::vector<std::vector<Complex>> product_;
  std::vector<std::vector<Complex>> slots_;
  std::vector<double> power_;
  std::vector<double> q_;
};

/// Relative threshold under which an average counts as zero.
inline constexpr double kZeroTolerance = 1e-12;

struct ConditionBudgets {
  double b1 = kInfinity;
  double b2 = kInfinity;
  double b3 = kInfinity;
};

struct ConditionReport {
  DyadicCube root;
  int m = 0;
  std::vector<double> q_slots;
  Rational q;
  double floor = 0.0;
  double h = 0.0;
  std::size_t cubes_checked = 0;

  double b1 = 0.0;
  std::vector<double> b1_slots;
  std::vector<Complex> slot_means;  // avg_Q b_i
  Complex a;                        // avg_Q prod b_i
  double b2 = kInfinity;            // 1/|a|, infinity when a = 0

  double b3_compat = 0.0;
  DyadicCube b3_witness;
  Complex witness_numerator;
  std::vector<Complex> witness_slot_means;

  bool pass_b1 = false;
  bool pass_b2 = false;
  bool pass_b3 = false;
  bool pass() const { return pass_b1 && pass_b2 && pass_b3; }
};

/// B1 = max_i avg_Q |b_i|^{q_i}; B2 = 1/|avg_Q prod b|; B3 = sup over dyadic
/// R in Q with l(R) >= floor of |avg_R prod b| / prod |avg_R b_i|
/// (0/0 satisfied, nonzero/0 infinite).  Quadrature cells have side h <= floor.
ConditionReport check_system(std::span<const PseudoAccretiveSystem> systems, const DyadicCube& q,
                             double h, double floor, const ConditionBudgets& budgets = {},
                             Exec exec = Exec::parallel);

struct CancelReport {
  double value = 0.0;
  bool pass = false;
  double budget = kInfinity;
  double t_lo = 0.0;
  double t_hi = 0.0;
  std::size_t scales_used = 0;
};

/// (1/|Q|) int_Q ( sum over t_k < l(Q) of |Theta_{t_k}(b_Q^1..b_Q^m)(x)|^2 ln2/K )^{q/2} dx
/// with the b_Q sampled on a window `margin` * l(Q) wider than Q on each side
/// and the integral over the cells of Q.
CancelReport check_theta_cancel(const KernelFamily& k,
                                std::span<const PseudoAccretiveSystem> systems,
                                const DyadicCube& q, double q_exp, const ScaleGrid& scales,
                                double h, double budget = kInfinity, double margin = 1.0,
                                const ApplyOptions& opt = {});

}  // namespace mltb
