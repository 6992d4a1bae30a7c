#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace mltb {

/// Gauss-Legendre nodes and weights on [-1, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

const QuadratureRule& gauss_legendre(int points);

/// Log-midpoint discretisation of  int_{t_min}^{t_max} F(t) dt/t :
/// t_j = t_min 2^{(j + 1/2)/K}, weight ln2/K, j = 0 .. K log2(t_max/t_min) - 1.
class ScaleGrid {
 public:
  ScaleGrid() = default;
  /// K log2(t_max / t_min) must be an integer (to 1e-9).
  ScaleGrid(double t_min, double t_max, int per_octave);

  double t_min() const { return t_min_; }
  double t_max() const { return t_max_; }
  int per_octave() const { return per_octave_; }
  std::size_t size() const { return count_; }
  double operator[](std::size_t j) const;
  double weight() const;
  std::vector<double> scales() const;

  /// Same grid with both ends multiplied by 2^octaves.
  ScaleGrid shifted(int octaves) const;
  /// Indices j with lower < t_j < upper.
  std::vector<std::size_t> within(double lower, double upper) const;

 private:
  double t_min_ = 1.0;
  double t_max_ = 2.0;
  int per_octave_ = 1;
  std::size_t count_ = 1;
};

/// Exact rational with int64 parts, always normalised (den > 0, gcd 1).
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  Rational() = default;
  Rational(std::int64_t n, std::int64_t d = 1);

  /// Best rational approximation with denominator <= 10^6; the input must be
  /// within 1e-12 relative of it, otherwise InvalidArgument.
  static Rational from_double(double x);

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  Rational reciprocal() const;
  Rational operator+(const Rational& o) const;
  bool operator==(const Rational&) const = default;
  std::string str() const;
};

/// Exponents (p; p_1..p_m) satisfying 1/p = sum 1/p_i exactly.
struct IndexTuple {
  Rational p;
  std::vector<Rational> slots;

  /// Validates p_i in (1, inf) and the Holder relation; InvalidArgument otherwise.
  static IndexTuple make(double p, const std::vector<double>& slot_exponents);

  double target() const { return p.value(); }
  double slot(std::size_t i) const { return slots[i].value(); }
  std::size_t m() const { return slots.size(); }
};

/// Combined exponent q with 1/q = sum 1/q_i (no range restriction on q).
Rational harmonic_combination(const std::vector<double>& exponents);

}  // namespace mltb
