#pragma once

#include <functional>
#include <span>
#include <vector>

#include "mltb/accretive.hpp"
#include "mltb/avgops.hpp"
#include "mltb/grid.hpp"
#include "mltb/quadrature.hpp"

namespace mltb {

/// L(f_1..f_m) = sum_k Q_t( (Q_t^2 beta) prod_i P_t f_i ) ln2/K  at t = t_k.
class Paraproduct {
 public:
  /// psi must be mean zero (it is Calderon-normalised here); phi unit mass.
  Paraproduct(SampledFunction beta, int m, ScaleGrid scales, MollifierSpec psi,
              MollifierSpec phi, Exec exec = Exec::parallel);

  int m() const { return m_; }
  int n() const { return beta_.grid().dim(); }
  const SampledFunction& beta() const { return beta_; }
  const ScaleGrid& scales() const { return scales_; }
  const MollifierSpec& psi() const { return psi_; }
  const MollifierSpec& phi() const { return phi_; }
  double calderon_constant() const { return calderon_c_; }

  /// Q_{t_k}^2 beta on the grid of beta (cached).
  const SampledFunction& q2_beta(std::size_t k) const { return q2beta_[k]; }

  /// Inputs must live on the grid of beta.
  SampledFunction eval(std::span<const SampledFunction> f) const;

  /// sum_k < (Q_t^2 beta) prod P_t f_i , Q_t g > ln2/K  (the duality form).
  Complex pairing_by_duality(std::span<const SampledFunction> f, const SampledFunction& g) const;

  /// l(x, y) = sum_k int psi_t(x - u) Q_t^2 beta(u) prod phi_t(u - y_i) du ln2/K,
  /// the u-integral by midpoint rule on the grid of beta.
  double kernel(std::span<const double> x, std::span<const double> ys) const;

 private:
  SampledFunction beta_;
  int m_ = 2;
  ScaleGrid scales_;
  MollifierSpec psi_;
  MollifierSpec phi_;
  Exec exec_;
  double calderon_c_ = 0.0;
  std::vector<SampledFunction> q2beta_;
};

struct CancellationReport {
  Complex pairing;            // <L(1..1), phi>
  Complex target;             // <beta, phi>
  double pairing_error = 0.0;
  double relative_error = 0.0;   // pairing_error / |<beta, phi>|
  std::vector<double> transpose_residuals;  // |<L(..phi in slot i..), 1>|
  double transpose_scale = 0.0;  // ||beta||_inf ||phi||_1
  double phi_mean_correction = 0.0;  // |mean| removed from the test function
};

/// The constant-1 inputs fill the window of beta.
CancellationReport test_cancellation(const Paraproduct& p, const SampledFunction& phi_test);

struct CzSweepReport {
  double size_constant = 0.0;        // max |l| d^{mn}
  double regularity_constant = 0.0;  // max |l(x) - l(x')| d^{mn+gamma} / |x - x'|^gamma
  double gamma = 1.0;
  std::size_t samples = 0;
  std::vector<double> witness_size;  // x then ys of the argmax
  std::vector<double> witness_reg;
  bool pass = false;                 // both constants within budget
  double budget = kInfinity;
};

/// d = sum |x - y_i| log-spread in [d_lo, d_hi]; points placed around `centre`.
CzSweepReport cz_sweep(const Paraproduct& p, std::span<const double> centre, double d_lo,
                       double d_hi, std::size_t count, double gamma, double budget,
                       std::uint64_t seed);

/// The multilinear operator under test in the Tb condition.
using MultilinearOperator = std::function<SampledFunction(std::span<const SampledFunction>)>;

struct TbReport {
  double value = 0.0;
  bool pass = false;
  double budget = kInfinity;
  bool q_below_two = false;  // the Tb theorem asks for q >= 2
  std::size_t scales_used = 0;
};

/// (1/|Q|) int_Q ( sum over t_k < l(Q) of |Q_t T(P_t b_Q^1..P_t b_Q^m)(x)|^2 ln2/K )^{q/2} dx.
/// The b_Q are generated on `grid`, which must contain Q.
TbReport tb_condition(const MultilinearOperator& op, std::span<const PseudoAccretiveSystem> systems,
                      const DyadicCube& q, double q_exp, const ScaleGrid& scales,
                      const GridSpec& grid, const MollifierSpec& psi, const MollifierSpec& phi,
                      double budget = kInfinity);

}  // namespace mltb
