#include "mltb/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "mltb/errors.hpp"

namespace mltb {

namespace {

QuadratureRule build_gauss_legendre(int n) {
  QuadratureRule r;
  r.nodes.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // Newton on P_n from the Chebyshev-like initial guess
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) {
        p1 = x;
        p0 = 1.0;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[n - 1 - i] = x;
    r.weights[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return r;
}

}  // namespace

const QuadratureRule& gauss_legendre(int points) {
  if (points < 1 || points > 64) throw InvalidArgument("Gauss-Legendre order must be in [1, 64]");
  static std::mutex mu;
  static std::map<int, QuadratureRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(points);
  if (it == cache.end()) it = cache.emplace(points, build_gauss_legendre(points)).first;
  return it->second;
}

// --- ScaleGrid -------------------------------------------------------------------

ScaleGrid::ScaleGrid(double t_min, double t_max, int per_octave)
    : t_min_(t_min), t_max_(t_max), per_octave_(per_octave) {
  if (!(t_min > 0.0) || !(t_max > t_min) || !std::isfinite(t_max)) {
    throw InvalidArgument("scale grid needs 0 < t_min < t_max");
  }
  if (per_octave < 1) throw InvalidArgument("samples per octave must be >= 1");
  const double c = per_octave * std::log2(t_max / t_min);
  const double r = std::round(c);
  if (std::abs(c - r) > 1e-9 * std::max(1.0, c)) {
    throw InvalidArgument("K log2(t_max/t_min) must be an integer");
  }
  count_ = static_cast<std::size_t>(r);
}

double ScaleGrid::operator[](std::size_t j) const {
  return t_min_ * std::exp2((static_cast<double>(j) + 0.5) / per_octave_);
}

double ScaleGrid::weight() const { return std::log(2.0) / per_octave_; }

std::vector<double> ScaleGrid::scales() const {
  std::vector<double> s(count_);
  for (std::size_t j = 0; j < count_; ++j) s[j] = (*this)[j];
  return s;
}

ScaleGrid ScaleGrid::shifted(int octaves) const {
  return ScaleGrid(std::ldexp(t_min_, octaves), std::ldexp(t_max_, octaves), per_octave_);
}

std::vector<std::size_t> ScaleGrid::within(double lower, double upper) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < count_; ++j) {
    const double t = (*this)[j];
    if (t > lower && t < upper) out.push_back(j);
  }
  return out;
}

// --- Rational ----------------------------------------------------------------------

Rational::Rational(std::int64_t n, std::int64_t d) : num(n), den(d) {
  if (d == 0) throw InvalidArgument("zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  if (g > 1) {
    num /= g;
    den /= g;
  }
}

Rational Rational::from_double(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("exponent must be finite");
  // continued-fraction convergents
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double r = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(r);
    if (std::abs(a) > 1e12) break;
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h1 + h0;
    const std::int64_t k2 = ai * k1 + k0;
    if (k2 > 1000000) break;
    h0 = h1;
    h1 = h2;
    k0 = k1;
    k1 = k2;
    const double approx = static_cast<double>(h1) / static_cast<double>(k1);
    if (std::abs(approx - x) <= 1e-12 * std::max(1.0, std::abs(x))) return Rational(h1, k1);
    const double frac = r - a;
    if (frac == 0.0) break;
    r = 1.0 / frac;
  }
  throw InvalidArgument("exponent " + std::to_string(x) + " is not a simple rational");
}

Rational Rational::reciprocal() const {
  if (num == 0) throw InvalidArgument("reciprocal of zero");
  return Rational(den, num);
}

Rational Rational::operator+(const Rational& o) const {
  const std::int64_t g = std::gcd(den, o.den);
  return Rational(num * (o.den / g) + o.num * (den / g), den / g * o.den);
}

std::string Rational::str() const {
  return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den);
}

IndexTuple IndexTuple::make(double p, const std::vector<double>& slot_exponents) {
  if (slot_exponents.empty()) throw InvalidArgument("need at least one slot exponent");
  IndexTuple t;
  t.p = Rational::from_double(p);
  if (t.p.num <= 0) throw InvalidArgument("target exponent must be positive");
  Rational sum(0);
  for (double pi : slot_exponents) {
    if (!(pi > 1.0) || !std::isfinite(pi)) throw InvalidArgument("slot exponents must lie in (1, inf)");
    const Rational r = Rational::from_double(pi);
    t.slots.push_back(r);
    sum = sum + r.reciprocal();
  }
  if (!(sum == t.p.reciprocal())) {
    throw InvalidArgument("Holder relation violated: 1/" + t.p.str() + " != " + sum.str());
  }
  return t;
}

Rational harmonic_combination(const std::vector<double>& exponents) {
  if (exponents.empty()) throw InvalidArgument("need at least one exponent");
  Rational sum(0);
  for (double q : exponents) {
    if (!(q > 0.0)) throw InvalidArgument("exponents must be positive");
    sum = sum + Rational::from_double(q).reciprocal();
  }
  return sum.reciprocal();
}

}  // namespace mltb
