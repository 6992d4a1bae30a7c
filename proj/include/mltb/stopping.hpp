#pragma once

#include <span>
#include <vector>

#include "mltb/accretive.hpp"
#include "mltb/dyadic.hpp"
#include "mltb/grid.hpp"

namespace mltb {

struct Decomposition {
  DyadicCube root;
  std::vector<DyadicCube> selected;  // maximal cubes, lexicographic by (generation, corner)
  double exceptional_measure = 0.0;  // |Q| - sum |Q_k|
  std::size_t floor_leaves = 0;      // floor cubes still failing the criterion (assigned to E)
  double floor = 0.0;
  Complex a;                         // avg_Q prod b
  double b1 = 0.0;
  double q = 0.0;
  int m = 0;

  /// tau_Q(x) = l(Q_k) for x in Q_k, 0 on E (and outside Q).
  double tau(std::span<const double> x) const;
  /// Nominal eta: (2 max(B1,1)^m)^{-q'}.
  double eta_nominal() const;
  /// (|a| / (2 prod B1_i^{1/q_i}))^{q'} with the per-slot B1 from the same measurement.
  double eta_rigorous(std::span<const double> b1_slots, std::span<const double> q_slots) const;
};

/// Maximal dyadic subcubes R of Q (descending from the children, down to side
/// `floor`) with Re[avg_R prod b / a] <= 1/2.  Throws DomainError when a = 0.
Decomposition decompose(std::span<const PseudoAccretiveSystem> systems, const DyadicCube& q,
                        double h, double floor, Exec exec = Exec::parallel);

/// Same, from a prepared table (h and floor taken from it / the argument).
Decomposition decompose(const SubcubeTable& table, double floor);

struct LowerBoundSample {
  std::vector<double> x;
  double t = 0.0;
};

struct LowerBoundReport {
  std::size_t samples = 0;
  std::size_t violations_weak = 0;    // against 1/(2 max(B2,1)^m max(B3,1))
  std::size_t violations_strong = 0;  // against 1/(2 max(B2,1) max(B3,1))
  double bound_weak = 0.0;
  double bound_strong = 0.0;
  double min_product = kInfinity;
  LowerBoundSample worst;
  double margin_weak() const { return min_product - bound_weak; }
  double margin_strong() const { return min_product - bound_strong; }
};

/// prod_i |A_t b_Q^i(x)| over the samples, all of which must satisfy
/// tau_Q(x) < t (InvalidArgument otherwise) and Q(x, t) inside Q at or above the
/// table's resolution.
LowerBoundReport verify_lower_bound(const Decomposition& d, const SubcubeTable& table, double b2,
                                    double b3, std::span<const LowerBoundSample> samples);

/// Deterministic sweep of `count` points (x uniform in Q, t log-uniform in
/// (max(tau_Q(x), floor/2), l(Q))).
std::vector<LowerBoundSample> lower_bound_sweep(const Decomposition& d, std::size_t count,
                                                std::uint64_t seed);

}  // namespace mltb
