#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "mltb/dyadic.hpp"

namespace mltb {

using Complex = std::complex<double>;

/// Uniform cell-centred grid over an axis-aligned window [lo, lo + cells*h).
struct GridSpec {
  std::vector<double> lo;
  std::vector<std::int64_t> cells;
  double h = 1.0;

  GridSpec() = default;
  GridSpec(std::vector<double> lo_, std::vector<std::int64_t> cells_, double h_);

  /// Window [lo, hi) on every axis with spacing h; hi - lo must be a multiple of h.
  static GridSpec box(int dim, double lo, double hi, double h);
  /// The window equal to a dyadic cube, sampled at spacing h.
  static GridSpec over(const DyadicCube& q, double h);

  int dim() const { return static_cast<int>(cells.size()); }
  std::size_t size() const;
  double hi(int axis) const { return lo[axis] + static_cast<double>(cells[axis]) * h; }
  double cell_volume() const;

  std::size_t flat(std::span<const std::int64_t> idx) const;
  void unflatten(std::size_t flat, std::span<std::int64_t> idx) const;
  void center(std::size_t flat, std::span<double> x) const;
  std::vector<double> center(std::size_t flat) const;

  /// h is a power of two and every lo is an integer multiple of h, so dyadic
  /// cubes of side >= h are unions of cells.
  bool dyadic_aligned() const;
  /// log2(1/h); requires a power-of-two spacing.
  int level() const;
  /// lo / h on the given axis (requires alignment).
  std::int64_t origin(int axis) const;

  /// Range of cell indices (per axis, half-open) covered by a cell-aligned cube;
  /// throws AlignmentError / DomainError.
  void cube_cells(const DyadicCube& q, std::span<std::int64_t> first,
                  std::span<std::int64_t> last) const;
  bool cube_inside(const DyadicCube& q) const;

  bool operator==(const GridSpec&) const = default;
};

/// Compactly supported function sampled at cell centres, zero outside the window.
/// Immutable: arithmetic returns new instances.
class SampledFunction {
 public:
  SampledFunction() = default;
  SampledFunction(GridSpec grid, std::vector<Complex> values);

  static SampledFunction zeros(const GridSpec& grid);
  static SampledFunction constant(const GridSpec& grid, Complex c);
  static SampledFunction sample(const GridSpec& grid,
                                const std::function<Complex(std::span<const double>)>& f);

  const GridSpec& grid() const { return grid_; }
  std::span<const Complex> values() const { return values_; }
  const Complex& operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  SampledFunction operator+(const SampledFunction& o) const;
  SampledFunction operator-(const SampledFunction& o) const;
  SampledFunction operator*(const SampledFunction& o) const;
  SampledFunction scaled(Complex c) const;
  SampledFunction plus_constant(Complex c) const;
  SampledFunction modulus() const;
  SampledFunction real_part() const;
  /// Values re-indexed onto another grid with the same spacing and an
  /// integer cell offset; nonzero values falling outside `target` are a DomainError.
  SampledFunction embedded(const GridSpec& target) const;
  /// Translate by whole cells (the window moves with the data).
  SampledFunction shifted(std::span<const std::int64_t> cells) const;

  double max_abs() const;
  /// Evaluate as a piecewise-constant function (0 outside the window).
  Complex at(std::span<const double> x) const;

 private:
  GridSpec grid_;
  std::vector<Complex> values_;
};

/// Midpoint-rule L^p norm (p >= 1, p = infinity allowed).
double lp_norm(const SampledFunction& f, double p);

constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// (1/|Q|) * integral over Q, for a cell-aligned cube inside the window.
Complex average(const SampledFunction& f, const DyadicCube& q);

/// Integral of f over the window (midpoint rule).
Complex integral(const SampledFunction& f);

/// Inner product <f, g> = integral f * g (no conjugation, real pairing).
Complex pairing(const SampledFunction& f, const SampledFunction& g);

struct BmoEstimate {
  double value = 0.0;
  DyadicCube witness;
  int finest_generation = 0;
  int coarsest_generation = 0;
  std::size_t cubes_examined = 0;
};

/// sup over cell-aligned dyadic cubes inside the window (side from h up to the
/// window) of the mean oscillation (1/|Q|) int_Q |f - f_Q|.
BmoEstimate bmo_norm(const SampledFunction& f);

/// Mean oscillation of f over one cube (used by the estimator and its tests).
double mean_oscillation(const SampledFunction& f, const DyadicCube& q);

// Serialization (formats documented in docs/formats.md).
void write_csv(std::ostream& os, const SampledFunction& f);
SampledFunction read_csv(std::istream& is);
void write_binary(std::ostream& os, const SampledFunction& f);
SampledFunction read_binary(std::istream& is);
/// Load by extension: ".csv" text, anything else binary.
SampledFunction load_function(const std::string& path);
void save_function(const std::string& path, const SampledFunction& f);

}  // namespace mltb
