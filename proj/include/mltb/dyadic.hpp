#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mltb/exec.hpp"

namespace mltb {

/// Half-open dyadic cube  prod_i [k_i 2^-g, (k_i + 1) 2^-g)  in R^n.
///
/// The generation g may be negative (cubes larger than the unit cube).  Side
/// lengths are exact powers of two and corners exact integers, so every
/// coordinate computed from a cube is exactly representable for |k| < 2^53.
struct DyadicCube {
  int generation = 0;
  std::vector<std::int64_t> corner;

  DyadicCube() = default;
  DyadicCube(int g, std::vector<std::int64_t> k) : generation(g), corner(std::move(k)) {}

  int dim() const { return static_cast<int>(corner.size()); }
  double side() const;
  double measure() const;
  double lower(int axis) const;
  double upper(int axis) const;
  std::vector<double> center() const;

  bool contains(std::span<const double> x) const;
  /// True when `other` is a (not necessarily strict) dyadic subcube of this cube.
  bool contains(const DyadicCube& other) const;

  DyadicCube parent() const;
  /// Ancestor at generation g <= generation.
  DyadicCube ancestor(int g) const;
  /// The 2^n children in lexicographic corner order.
  std::vector<DyadicCube> children() const;

  auto operator<=>(const DyadicCube&) const = default;
  bool operator==(const DyadicCube&) const = default;
};

struct DyadicCubeHash {
  std::size_t operator()(const DyadicCube& q) const noexcept;
};

/// Closed interval of admissible generations.  Requests outside are errors.
struct GenerationRange {
  int min_generation = -40;
  int max_generation = 48;
};

/// Generation of the smallest dyadic side length strictly greater than t.
int generation_above(double t);

/// Q(x, t): the smallest dyadic cube containing x with side length > t.
DyadicCube smallest_containing(std::span<const double> x, double t,
                               const GenerationRange& range = {});

/// Q together with all descendants down to `depth` further generations,
/// level by level, each level in lexicographic order.
std::vector<DyadicCube> subcubes(const DyadicCube& q, int depth,
                                 std::size_t cap = std::size_t{1} << 22);

/// The 2^{n d} descendants of Q exactly d generations down, lexicographic.
std::vector<DyadicCube> descendants(const DyadicCube& q, int d);

/// Number of cubes `subcubes(q, depth)` would return, saturating.
std::size_t subcube_count(int dim, int depth);

/// Tent T(Q) = Q x (0, l(Q)].
struct Tent {
  DyadicCube base;
  double height() const { return base.side(); }
  bool contains(std::span<const double> x, double t) const {
    return t > 0.0 && t <= height() && base.contains(x);
  }
};

/// Do the closures of two cubes intersect?
bool closures_touch(const DyadicCube& a, const DyadicCube& b);

/// Do two cubes share interior points?
bool overlaps(const DyadicCube& a, const DyadicCube& b);

// ---------------------------------------------------------------------------
// Whitney decomposition of an open set given as a union of grid cells.

/// Open set represented by the interior of a union of cells of side 2^-level.
/// Cell indices are absolute: cell j on axis a is [ (origin[a]+j) h, (origin[a]+j+1) h ).
struct CellMask {
  int level = 0;
  std::vector<std::int64_t> origin;
  std::vector<std::int64_t> cells;
  std::vector<std::uint8_t> inside;  // row-major, last axis fastest

  int dim() const { return static_cast<int>(cells.size()); }
  double spacing() const;
  std::size_t size() const;
  std::size_t flat(std::span<const std::int64_t> idx) const;
  void unflatten(std::size_t flat, std::span<std::int64_t> idx) const;
  std::size_t count_inside() const;
};

struct WhitneyResult {
  std::vector<DyadicCube> cubes;
  /// Cells of the set that no cube covers (a boundary layer one cell thick).
  std::size_t uncovered_cells = 0;
  /// max over cubes of dist(Q, complement) / (sqrt(n) l(Q)).
  double max_distance_ratio = 0.0;
  double min_distance_ratio = 0.0;
};

WhitneyResult whitney(const CellMask& mask, Exec exec = Exec::parallel);

/// Post-hoc check of the Whitney properties, computed independently of the
/// construction (brute-force distances).
struct WhitneyCheck {
  std::size_t overlap_violations = 0;
  std::size_t distance_violations = 0;   // sqrt(n) l <= dist <= 4 sqrt(n) l
  std::size_t ratio_violations = 0;      // touching cubes: 1/4 <= ratio <= 4
  std::size_t touching_violations = 0;   // at most 12^n touching cubes
  std::size_t coverage_mismatches = 0;   // covered cells vs cells with dist >= sqrt(n) h
  std::size_t max_touching = 0;
  double max_distance_ratio = 0.0;
  bool ok() const {
    return overlap_violations == 0 && distance_violations == 0 && ratio_violations == 0 &&
           touching_violations == 0 && coverage_mismatches == 0;
  }
};

WhitneyCheck check_whitney(const CellMask& mask, const std::vector<DyadicCube>& cubes);

}  // namespace mltb
