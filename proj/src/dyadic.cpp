#include "mltb/dyadic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "mltb/errors.hpp"
#include "mltb/parallel.hpp"

namespace mltb {

double DyadicCube::side() const { return std::ldexp(1.0, -generation); }

double DyadicCube::measure() const { return std::ldexp(1.0, -generation * dim()); }

double DyadicCube::lower(int axis) const {
  return std::ldexp(static_cast<double>(corner[axis]), -generation);
}

double DyadicCube::upper(int axis) const {
  return std::ldexp(static_cast<double>(corner[axis] + 1), -generation);
}

std::vector<double> DyadicCube::center() const {
  std::vector<double> c(corner.size());
  for (int a = 0; a < dim(); ++a) c[a] = std::ldexp(static_cast<double>(corner[a]) + 0.5, -generation);
  return c;
}

bool DyadicCube::contains(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (int a = 0; a < dim(); ++a) {
    if (!(x[a] >= lower(a) && x[a] < upper(a))) return false;
  }
  return true;
}

bool DyadicCube::contains(const DyadicCube& other) const {
  if (other.dim() != dim() || other.generation < generation) return false;
  return other.ancestor(generation) == *this;
}

DyadicCube DyadicCube::parent() const { return ancestor(generation - 1); }

DyadicCube DyadicCube::ancestor(int g) const {
  if (g > generation) throw InvalidArgument("ancestor generation exceeds cube generation");
  const int shift = generation - g;
  DyadicCube a;
  a.generation = g;
  a.corner.resize(corner.size());
  for (std::size_t i = 0; i < corner.size(); ++i) {
    // arithmetic shift floors toward -infinity, matching floor(k / 2^shift)
    a.corner[i] = shift >= 63 ? (corner[i] < 0 ? -1 : 0) : (corner[i] >> shift);
  }
  return a;
}

std::vector<DyadicCube> DyadicCube::children() const {
  const int n = dim();
  std::vector<DyadicCube> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    DyadicCube c;
    c.generation = generation + 1;
    c.corner.resize(n);
    for (int a = 0; a < n; ++a) {
      // axis 0 is the most significant bit so the list is lexicographic
      const std::size_t bit = (mask >> (n - 1 - a)) & 1u;
      c.corner[a] = 2 * corner[a] + static_cast<std::int64_t>(bit);
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::size_t DyadicCubeHash::operator()(const DyadicCube& q) const noexcept {
  std::size_t h = std::hash<int>{}(q.generation);
  for (auto k : q.corner) h ^= std::hash<std::int64_t>{}(k) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
  return h;
}

int generation_above(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw InvalidArgument("scale t must be positive and finite");
  int e = 0;
  std::frexp(t, &e);  // t in [2^(e-1), 2^e)
  // side 2^e is the smallest power of two strictly above t in both cases
  // t == 2^(e-1) and t in the open interval.
  return -e;
}

DyadicCube smallest_containing(std::span<const double> x, double t, const GenerationRange& range) {
  for (double xi : x) {
    if (!std::isfinite(xi)) throw InvalidArgument("point must be finite");
  }
  const int g = generation_above(t);
  if (g < range.min_generation || g > range.max_generation) {
    throw InvalidArgument("generation " + std::to_string(g) + " outside configured range [" +
                          std::to_string(range.min_generation) + ", " +
                          std::to_string(range.max_generation) + "]");
  }
  DyadicCube q;
  q.generation = g;
  q.corner.resize(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) {
    q.corner[a] = static_cast<std::int64_t>(std::floor(std::ldexp(x[a], g)));
  }
  return q;
}

std::size_t subcube_count(int dim, int depth) {
  std::size_t total = 0;
  for (int d = 0; d <= depth; ++d) {
    const int bits = dim * d;
    if (bits >= 62) return static_cast<std::size_t>(-1);
    total += std::size_t{1} << bits;
  }
  return total;
}

std::vector<DyadicCube> subcubes(const DyadicCube& q, int depth, std::size_t cap) {
  if (depth < 0) throw InvalidArgument("depth must be nonnegative");
  const std::size_t count = subcube_count(q.dim(), depth);
  if (count > cap) {
    throw ResourceError("subcube enumeration of " + std::to_string(count) + " cubes exceeds cap " +
                        std::to_string(cap));
  }
  std::vector<DyadicCube> out;
  out.reserve(count);
  std::vector<DyadicCube> level{q};
  for (int d = 0; d <= depth; ++d) {
    out.insert(out.end(), level.begin(), level.end());
    if (d == depth) break;
    std::vector<DyadicCube> next;
    next.reserve(level.size() << q.dim());
    for (const auto& c : level) {
      auto ch = c.children();
      next.insert(next.end(), ch.begin(), ch.end());
    }
    std::sort(next.begin(), next.end());
    level = std::move(next);
  }
  return out;
}

std::vector<DyadicCube> descendants(const DyadicCube& q, int d) {
  if (d < 0) throw InvalidArgument("depth must be nonnegative");
  const int n = q.dim();
  if (static_cast<long>(n) * d > 30) throw ResourceError("too many descendants requested");
  const std::int64_t side = std::int64_t{1} << d;
  const std::size_t count = std::size_t{1} << (n * d);
  std::vector<DyadicCube> out;
  out.reserve(count);
  std::vector<std::int64_t> k(n, 0);
  for (std::size_t c = 0; c < count; ++c) {
    std::size_t r = c;
    for (int a = n - 1; a >= 0; --a) {
      k[a] = (q.corner[a] << d) + static_cast<std::int64_t>(r % static_cast<std::size_t>(side));
      r /= static_cast<std::size_t>(side);
    }
    out.emplace_back(q.generation + d, k);
  }
  return out;
}

namespace {

// Closed cube boxes in units of the finer of the two sides.
struct IntBox {
  std::vector<std::int64_t> lo, hi;
};

IntBox to_box(const DyadicCube& q, int g) {
  IntBox b;
  const int shift = g - q.generation;
  for (auto k : q.corner) {
    b.lo.push_back(k << shift);
    b.hi.push_back((k + 1) << shift);
  }
  return b;
}

}  // namespace

bool closures_touch(const DyadicCube& a, const DyadicCube& b) {
  const int g = std::max(a.generation, b.generation);
  const IntBox ba = to_box(a, g), bb = to_box(b, g);
  for (int i = 0; i < a.dim(); ++i) {
    if (ba.hi[i] < bb.lo[i] || bb.hi[i] < ba.lo[i]) return false;
  }
  return true;
}

bool overlaps(const DyadicCube& a, const DyadicCube& b) {
  const int g = std::max(a.generation, b.generation);
  const IntBox ba = to_box(a, g), bb = to_box(b, g);
  for (int i = 0; i < a.dim(); ++i) {
    if (ba.hi[i] <= bb.lo[i] || bb.hi[i] <= ba.lo[i]) return false;
  }
  return true;
}

// --- CellMask ---------------------------------------------------------------

double CellMask::spacing() const { return std::ldexp(1.0, -level); }

std::size_t CellMask::size() const {
  std::size_t s = 1;
  for (auto c : cells) s *= static_cast<std::size_t>(c);
  return s;
}

std::size_t CellMask::flat(std::span<const std::int64_t> idx) const {
  std::size_t f = 0;
  for (int a = 0; a < dim(); ++a) f = f * static_cast<std::size_t>(cells[a]) + static_cast<std::size_t>(idx[a]);
  return f;
}

void CellMask::unflatten(std::size_t f, std::span<std::int64_t> idx) const {
  for (int a = dim() - 1; a >= 0; --a) {
    idx[a] = static_cast<std::int64_t>(f % static_cast<std::size_t>(cells[a]));
    f /= static_cast<std::size_t>(cells[a]);
  }
}

std::size_t CellMask::count_inside() const {
  return static_cast<std::size_t>(std::count(inside.begin(), inside.end(), std::uint8_t{1}));
}

namespace {

void validate_mask(const CellMask& mask) {
  if (mask.dim() < 1) throw InvalidArgument("cell mask needs at least one axis");
  if (mask.origin.size() != mask.cells.size()) throw InvalidArgument("origin/cells rank mismatch");
  for (auto c : mask.cells) {
    if (c < 1) throw InvalidArgument("cell counts must be positive");
  }
  if (mask.inside.size() != mask.size()) throw InvalidArgument("mask size does not match cell counts");
  std::vector<std::int64_t> idx(mask.dim());
  for (std::size_t f = 0; f < mask.size(); ++f) {
    if (!mask.inside[f]) continue;
    mask.unflatten(f, idx);
    for (int a = 0; a < mask.dim(); ++a) {
      if (idx[a] == 0 || idx[a] == mask.cells[a] - 1) {
        throw InvalidArgument("open set touches the window boundary");
      }
    }
  }
}

struct WhitneyBuilder {
  const CellMask& mask;
  const std::vector<std::int64_t>& dist2;
  WhitneyResult& out;
  int n;

  // Minimum cell distance over the cells of a cube that lies inside the
  // window, or -1 if the cube leaves the window.  `any_inside` reports whether
  // the cube meets the set.
  std::int64_t min_distance(const DyadicCube& q, bool& any_inside) const {
    const int shift = mask.level - q.generation;
    const std::int64_t s = std::int64_t{1} << shift;
    std::vector<std::int64_t> first(n), idx(n);
    bool in_window = true;
    for (int a = 0; a < n; ++a) {
      first[a] = (q.corner[a] << shift) - mask.origin[a];
      if (first[a] < 0 || first[a] + s > mask.cells[a]) in_window = false;
    }
    any_inside = false;
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    // iterate over the intersection with the window
    std::vector<std::int64_t> lo(n), hi(n);
    for (int a = 0; a < n; ++a) {
      lo[a] = std::max<std::int64_t>(first[a], 0);
      hi[a] = std::min<std::int64_t>(first[a] + s, mask.cells[a]);
      if (lo[a] >= hi[a]) return -1;
    }
    idx = lo;
    while (true) {
      const std::size_t f = mask.flat(idx);
      if (mask.inside[f]) {
        any_inside = true;
        best = std::min(best, dist2[f]);
      } else {
        best = 0;
      }
      int a = n - 1;
      while (a >= 0 && ++idx[a] == hi[a]) {
        idx[a] = lo[a];
        --a;
      }
      if (a < 0) break;
    }
    return in_window ? best : -1;
  }

  void visit(const DyadicCube& q) {
    bool any_inside = false;
    const std::int64_t d2 = min_distance(q, any_inside);
    if (!any_inside) return;
    const int shift = mask.level - q.generation;
    const std::int64_t s = std::int64_t{1} << shift;
    if (d2 >= static_cast<std::int64_t>(n) * s * s) {
      out.cubes.push_back(q);
      return;
    }
    if (shift == 0) {
      ++out.uncovered_cells;
      return;
    }
    for (const auto& c : q.children()) visit(c);
  }
};

}  // namespace

WhitneyResult whitney(const CellMask& mask, Exec exec) {
  validate_mask(mask);
  WhitneyResult out;
  if (mask.count_inside() == 0) return out;
  const int n = mask.dim();
  const auto dist2 = cell_distances(mask, exec);

  std::int64_t extent = 1;
  for (auto c : mask.cells) extent = std::max(extent, c);
  int top_shift = 0;
  while ((std::int64_t{1} << top_shift) < extent) ++top_shift;
  const int g0 = mask.level - top_shift;

  // Root cubes of generation g0 meeting the window, lexicographic.
  std::vector<std::int64_t> first(n), last(n);
  for (int a = 0; a < n; ++a) {
    const std::int64_t lo = mask.origin[a];
    const std::int64_t hi = mask.origin[a] + mask.cells[a] - 1;
    first[a] = lo >> top_shift;
    last[a] = hi >> top_shift;
  }
  WhitneyBuilder b{mask, dist2, out, n};
  std::vector<std::int64_t> k = first;
  while (true) {
    b.visit(DyadicCube(g0, k));
    int a = n - 1;
    while (a >= 0 && ++k[a] > last[a]) {
      k[a] = first[a];
      --a;
    }
    if (a < 0) break;
  }

  out.min_distance_ratio = kInfinity;
  for (const auto& q : out.cubes) {
    bool any = false;
    const double s = std::ldexp(1.0, mask.level - q.generation);
    const double d = std::sqrt(static_cast<double>(b.min_distance(q, any)));
    const double r = d / (std::sqrt(static_cast<double>(n)) * s);
    out.max_distance_ratio = std::max(out.max_distance_ratio, r);
    out.min_distance_ratio = std::min(out.min_distance_ratio, r);
  }
  if (out.cubes.empty()) out.min_distance_ratio = 0.0;
  return out;
}

WhitneyCheck check_whitney(const CellMask& mask, const std::vector<DyadicCube>& cubes) {
  WhitneyCheck chk;
  const int n = mask.dim();
  const double sqrt_n = std::sqrt(static_cast<double>(n));

  // Complement cells and window size in cell units.
  std::vector<std::vector<std::int64_t>> complement;
  std::vector<std::int64_t> idx(n);
  for (std::size_t f = 0; f < mask.size(); ++f) {
    if (mask.inside[f]) continue;
    mask.unflatten(f, idx);
    complement.push_back(idx);
  }
  // Squared distance between the closed box [lo, hi] (cell units relative to
  // the window) and the complement including everything outside the window.
  auto box_dist2 = [&](const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi) {
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (int a = 0; a < n; ++a) {
      const std::int64_t g = std::max<std::int64_t>(0, std::min(lo[a], mask.cells[a] - hi[a]));
      best = std::min(best, g * g);
    }
    for (const auto& c : complement) {
      std::int64_t d2 = 0;
      for (int a = 0; a < n; ++a) {
        const std::int64_t g = std::max<std::int64_t>({0, c[a] - hi[a], lo[a] - (c[a] + 1)});
        d2 += g * g;
      }
      best = std::min(best, d2);
    }
    return best;
  };

  std::vector<std::uint8_t> covered(mask.size(), 0);
  for (const auto& q : cubes) {
    const int shift = mask.level - q.generation;
    if (shift < 0) {
      ++chk.distance_violations;
      continue;
    }
    const std::int64_t s = std::int64_t{1} << shift;
    std::vector<std::int64_t> lo(n), hi(n);
    bool in_window = true;
    for (int a = 0; a < n; ++a) {
      lo[a] = (q.corner[a] << shift) - mask.origin[a];
      hi[a] = lo[a] + s;
      if (lo[a] < 0 || hi[a] > mask.cells[a]) in_window = false;
    }
    if (!in_window) {
      ++chk.distance_violations;
      continue;
    }
    const double d = std::sqrt(static_cast<double>(box_dist2(lo, hi)));
    const double diam = sqrt_n * static_cast<double>(s);
    chk.max_distance_ratio = std::max(chk.max_distance_ratio, d / diam);
    if (d < diam || d > 4.0 * diam) ++chk.distance_violations;
    // mark covered cells
    std::vector<std::int64_t> c = lo;
    while (true) {
      covered[mask.flat(c)] += 1;
      int a = n - 1;
      while (a >= 0 && ++c[a] == hi[a]) {
        c[a] = lo[a];
        --a;
      }
      if (a < 0) break;
    }
  }

  for (std::size_t i = 0; i < cubes.size(); ++i) {
    std::size_t touching = 0;
    for (std::size_t j = 0; j < cubes.size(); ++j) {
      if (i == j) continue;
      if (i < j && overlaps(cubes[i], cubes[j])) ++chk.overlap_violations;
      if (closures_touch(cubes[i], cubes[j])) {
        ++touching;
        const double ratio = cubes[i].side() / cubes[j].side();
        if (ratio < 0.25 || ratio > 4.0) ++chk.ratio_violations;
      }
    }
    chk.max_touching = std::max(chk.max_touching, touching);
    if (static_cast<double>(touching) > std::pow(12.0, n)) ++chk.touching_violations;
  }

  for (std::size_t f = 0; f < mask.size(); ++f) {
    bool expected = false;
    if (mask.inside[f]) {
      mask.unflatten(f, idx);
      std::vector<std::int64_t> hi(idx);
      for (auto& v : hi) ++v;
      expected = box_dist2(idx, hi) >= static_cast<std::int64_t>(n);
    }
    if (covered[f] > 1 || (covered[f] == 1) != expected) ++chk.coverage_mismatches;
  }
  return chk;
}

}  // namespace mltb
