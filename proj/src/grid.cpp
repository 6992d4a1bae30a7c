#include "mltb/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "mltb/errors.hpp"

namespace mltb {

// --- GridSpec ----------------------------------------------------------------

GridSpec::GridSpec(std::vector<double> lo_, std::vector<std::int64_t> cells_, double h_)
    : lo(std::move(lo_)), cells(std::move(cells_)), h(h_) {
  if (lo.size() != cells.size() || lo.empty()) throw InvalidArgument("grid rank mismatch or empty");
  if (!(h > 0.0) || !std::isfinite(h)) throw InvalidArgument("grid spacing must be positive");
  for (std::size_t a = 0; a < cells.size(); ++a) {
    if (cells[a] < 1) throw InvalidArgument("grid cell counts must be positive");
    if (!std::isfinite(lo[a])) throw InvalidArgument("grid origin must be finite");
  }
}

GridSpec GridSpec::box(int dim, double lo, double hi, double h) {
  if (dim < 1) throw InvalidArgument("dimension must be >= 1");
  const double span = (hi - lo) / h;
  const auto count = static_cast<std::int64_t>(std::llround(span));
  if (count < 1 || std::abs(span - static_cast<double>(count)) > 1e-9 * std::max(1.0, span)) {
    throw InvalidArgument("window side is not a positive multiple of h");
  }
  return GridSpec(std::vector<double>(dim, lo), std::vector<std::int64_t>(dim, count), h);
}

GridSpec GridSpec::over(const DyadicCube& q, double h) {
  const double span = q.side() / h;
  const auto count = static_cast<std::int64_t>(std::llround(span));
  if (count < 1 || std::abs(span - static_cast<double>(count)) > 1e-9 * span) {
    throw AlignmentError("cube side is not a multiple of h");
  }
  std::vector<double> lo(q.dim());
  for (int a = 0; a < q.dim(); ++a) lo[a] = q.lower(a);
  return GridSpec(std::move(lo), std::vector<std::int64_t>(q.dim(), count), h);
}

std::size_t GridSpec::size() const {
  std::size_t s = 1;
  for (auto c : cells) s *= static_cast<std::size_t>(c);
  return s;
}

double GridSpec::cell_volume() const { return std::pow(h, dim()); }

std::size_t GridSpec::flat(std::span<const std::int64_t> idx) const {
  std::size_t f = 0;
  for (int a = 0; a < dim(); ++a) f = f * static_cast<std::size_t>(cells[a]) + static_cast<std::size_t>(idx[a]);
  return f;
}

void GridSpec::unflatten(std::size_t f, std::span<std::int64_t> idx) const {
  for (int a = dim() - 1; a >= 0; --a) {
    idx[a] = static_cast<std::int64_t>(f % static_cast<std::size_t>(cells[a]));
    f /= static_cast<std::size_t>(cells[a]);
  }
}

void GridSpec::center(std::size_t f, std::span<double> x) const {
  for (int a = dim() - 1; a >= 0; --a) {
    const auto i = f % static_cast<std::size_t>(cells[a]);
    f /= static_cast<std::size_t>(cells[a]);
    x[a] = lo[a] + (static_cast<double>(i) + 0.5) * h;
  }
}

std::vector<double> GridSpec::center(std::size_t f) const {
  std::vector<double> x(dim());
  center(f, x);
  return x;
}

bool GridSpec::dyadic_aligned() const {
  int e = 0;
  if (std::frexp(h, &e) != 0.5) return false;
  for (double l : lo) {
    const double k = l / h;
    if (k != std::floor(k) || std::abs(k) > 9e15) return false;
  }
  return true;
}

int GridSpec::level() const {
  int e = 0;
  if (std::frexp(h, &e) != 0.5) throw AlignmentError("grid spacing is not a power of two");
  return 1 - e;
}

std::int64_t GridSpec::origin(int axis) const {
  const double k = lo[axis] / h;
  if (k != std::floor(k)) throw AlignmentError("grid origin is not a multiple of h");
  return static_cast<std::int64_t>(k);
}

void GridSpec::cube_cells(const DyadicCube& q, std::span<std::int64_t> first,
                          std::span<std::int64_t> last) const {
  if (q.dim() != dim()) throw InvalidArgument("cube and grid dimensions differ");
  if (!dyadic_aligned()) throw AlignmentError("grid is not dyadic-aligned");
  const int shift = level() - q.generation;
  if (shift < 0) throw AlignmentError("cube is finer than the grid");
  for (int a = 0; a < dim(); ++a) {
    first[a] = (q.corner[a] << shift) - origin(a);
    last[a] = first[a] + (std::int64_t{1} << shift);
    if (first[a] < 0 || last[a] > cells[a]) throw DomainError("cube leaves the grid window");
  }
}

bool GridSpec::cube_inside(const DyadicCube& q) const {
  if (q.dim() != dim() || !dyadic_aligned()) return false;
  const int shift = level() - q.generation;
  if (shift < 0 || shift > 62) return false;
  for (int a = 0; a < dim(); ++a) {
    const std::int64_t first = (q.corner[a] << shift) - origin(a);
    if (first < 0 || first + (std::int64_t{1} << shift) > cells[a]) return false;
  }
  return true;
}

// --- SampledFunction -------------------------------------------------------------

SampledFunction::SampledFunction(GridSpec grid, std::vector<Complex> values)
    : grid_(std::move(grid)), values_(std::move(values)) {
  if (values_.size() != grid_.size()) throw InvalidArgument("value count does not match grid");
  for (const auto& v : values_) {
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
      throw InvalidArgument("sampled values must be finite");
    }
  }
}

SampledFunction SampledFunction::zeros(const GridSpec& grid) {
  return SampledFunction(grid, std::vector<Complex>(grid.size()));
}

SampledFunction SampledFunction::constant(const GridSpec& grid, Complex c) {
  return SampledFunction(grid, std::vector<Complex>(grid.size(), c));
}

SampledFunction SampledFunction::sample(const GridSpec& grid,
                                        const std::function<Complex(std::span<const double>)>& f) {
  std::vector<Complex> v(grid.size());
  std::vector<double> x(grid.dim());
  for (std::size_t i = 0; i < v.size(); ++i) {
    grid.center(i, x);
    v[i] = f(x);
  }
  return SampledFunction(grid, std::move(v));
}

namespace {

void require_same_grid(const SampledFunction& a, const SampledFunction& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("functions live on different grids");
}

template <class Op>
SampledFunction zip(const SampledFunction& a, const SampledFunction& b, Op op) {
  require_same_grid(a, b);
  std::vector<Complex> v(a.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = op(a[i], b[i]);
  return SampledFunction(a.grid(), std::move(v));
}

}  // namespace

SampledFunction SampledFunction::operator+(const SampledFunction& o) const {
  return zip(*this, o, std::plus<>{});
}
SampledFunction SampledFunction::operator-(const SampledFunction& o) const {
  return zip(*this, o, std::minus<>{});
}
SampledFunction SampledFunction::operator*(const SampledFunction& o) const {
  return zip(*this, o, std::multiplies<>{});
}

SampledFunction SampledFunction::scaled(Complex c) const {
  std::vector<Complex> v(values_);
  for (auto& x : v) x *= c;
  return SampledFunction(grid_, std::move(v));
}

SampledFunction SampledFunction::plus_constant(Complex c) const {
  std::vector<Complex> v(values_);
  for (auto& x : v) x += c;
  return SampledFunction(grid_, std::move(v));
}

SampledFunction SampledFunction::modulus() const {
  std::vector<Complex> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::abs(values_[i]);
  return SampledFunction(grid_, std::move(v));
}

SampledFunction SampledFunction::real_part() const {
  std::vector<Complex> v(values_.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = values_[i].real();
  return SampledFunction(grid_, std::move(v));
}

SampledFunction SampledFunction::embedded(const GridSpec& target) const {
  const int n = grid_.dim();
  if (target.dim() != n || target.h != grid_.h) throw InvalidArgument("embedding needs equal spacing");
  std::vector<std::int64_t> offset(n);
  for (int a = 0; a < n; ++a) {
    const double k = (grid_.lo[a] - target.lo[a]) / grid_.h;
    const double r = std::round(k);
    if (std::abs(k - r) > 1e-9) throw AlignmentError("grids are not offset by whole cells");
    offset[a] = static_cast<std::int64_t>(r);
  }
  std::vector<Complex> v(target.size());
  std::vector<std::int64_t> idx(n);
  for (std::size_t i = 0; i < values_.size(); ++i) {
    grid_.unflatten(i, idx);
    bool inside = true;
    for (int a = 0; a < n; ++a) {
      idx[a] += offset[a];
      if (idx[a] < 0 || idx[a] >= target.cells[a]) inside = false;
    }
    if (!inside) {
      if (values_[i] != Complex{}) throw DomainError("nonzero values fall outside the target window");
      continue;
    }
    v[target.flat(idx)] = values_[i];
  }
  return SampledFunction(target, std::move(v));
}

SampledFunction SampledFunction::shifted(std::span<const std::int64_t> cells) const {
  GridSpec g = grid_;
  for (int a = 0; a < g.dim(); ++a) g.lo[a] += static_cast<double>(cells[a]) * g.h;
  return SampledFunction(std::move(g), values_);
}

double SampledFunction::max_abs() const {
  double m = 0.0;
  for (const auto& v : values_) m = std::max(m, std::abs(v));
  return m;
}

Complex SampledFunction::at(std::span<const double> x) const {
  std::vector<std::int64_t> idx(grid_.dim());
  for (int a = 0; a < grid_.dim(); ++a) {
    const double k = std::floor((x[a] - grid_.lo[a]) / grid_.h);
    if (k < 0 || k >= static_cast<double>(grid_.cells[a])) return {};
    idx[a] = static_cast<std::int64_t>(k);
  }
  return values_[grid_.flat(idx)];
}

// --- norms and averages ---------------------------------------------------------

double lp_norm(const SampledFunction& f, double p) {
  if (std::isnan(p) || p < 1.0) throw InvalidArgument("exponent p must be >= 1");
  if (std::isinf(p)) return f.max_abs();
  double s = 0.0;
  for (const auto& v : f.values()) s += std::pow(std::abs(v), p);
  return std::pow(s * f.grid().cell_volume(), 1.0 / p);
}

namespace {

// Calls fn(flat) for every cell of the box [first, last).
template <class Fn>
void for_box(const GridSpec& g, std::span<const std::int64_t> first,
             std::span<const std::int64_t> last, Fn&& fn) {
  const int n = g.dim();
  std::vector<std::int64_t> idx(first.begin(), first.end());
  while (true) {
    fn(g.flat(idx));
    int a = n - 1;
    while (a >= 0 && ++idx[a] == last[a]) {
      idx[a] = first[a];
      --a;
    }
    if (a < 0) return;
  }
}

}  // namespace

Complex average(const SampledFunction& f, const DyadicCube& q) {
  const int n = f.grid().dim();
  std::vector<std::int64_t> first(n), last(n);
  f.grid().cube_cells(q, first, last);
  Complex s{};
  std::size_t count = 0;
  for_box(f.grid(), first, last, [&](std::size_t i) {
    s += f[i];
    ++count;
  });
  return s / static_cast<double>(count);
}

Complex integral(const SampledFunction& f) {
  Complex s{};
  for (const auto& v : f.values()) s += v;
  return s * f.grid().cell_volume();
}

Complex pairing(const SampledFunction& f, const SampledFunction& g) {
  require_same_grid(f, g);
  Complex s{};
  for (std::size_t i = 0; i < f.size(); ++i) s += f[i] * g[i];
  return s * f.grid().cell_volume();
}

double mean_oscillation(const SampledFunction& f, const DyadicCube& q) {
  const int n = f.grid().dim();
  std::vector<std::int64_t> first(n), last(n);
  f.grid().cube_cells(q, first, last);
  const Complex mean = average(f, q);
  double s = 0.0;
  std::size_t count = 0;
  for_box(f.grid(), first, last, [&](std::size_t i) {
    s += std::abs(f[i] - mean);
    ++count;
  });
  return s / static_cast<double>(count);
}

BmoEstimate bmo_norm(const SampledFunction& f) {
  const GridSpec& g = f.grid();
  if (!g.dyadic_aligned()) throw AlignmentError("BMO estimate needs a dyadic-aligned grid");
  const int n = g.dim();
  const int level = g.level();
  std::int64_t min_cells = g.cells[0];
  for (auto c : g.cells) min_cells = std::min(min_cells, c);
  int max_shift = 0;
  while ((std::int64_t{2} << max_shift) <= min_cells) ++max_shift;

  BmoEstimate est;
  est.finest_generation = level;
  est.coarsest_generation = level - max_shift;
  est.witness = DyadicCube(level, std::vector<std::int64_t>(n, g.origin(0)));
  for (int a = 0; a < n; ++a) est.witness.corner[a] = g.origin(a);

  // Single cells have zero oscillation; start one generation up.
  for (int shift = 1; shift <= max_shift; ++shift) {
    const int gen = level - shift;
    std::vector<std::int64_t> kfirst(n), klast(n);
    bool any = true;
    for (int a = 0; a < n; ++a) {
      const std::int64_t o = g.origin(a);
      // cubes [k 2^shift, (k+1) 2^shift) inside [o, o + cells)
      kfirst[a] = (o + (std::int64_t{1} << shift) - 1) >> shift;
      klast[a] = (o + g.cells[a]) >> shift;  // exclusive
      if (kfirst[a] >= klast[a]) any = false;
    }
    if (!any) continue;
    std::vector<std::int64_t> k = kfirst;
    while (true) {
      DyadicCube q(gen, k);
      const double osc = mean_oscillation(f, q);
      ++est.cubes_examined;
      if (osc > est.value) {
        est.value = osc;
        est.witness = q;
      }
      int a = n - 1;
      while (a >= 0 && ++k[a] == klast[a]) {
        k[a] = kfirst[a];
        --a;
      }
      if (a < 0) break;
    }
  }
  return est;
}

// --- serialization ---------------------------------------------------------------

void write_csv(std::ostream& os, const SampledFunction& f) {
  const GridSpec& g = f.grid();
  auto num = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "# n=" << g.dim() << "\n# h=" << num(g.h) << "\n# lo=";
  for (int a = 0; a < g.dim(); ++a) os << (a ? "," : "") << num(g.lo[a]);
  os << "\n# cells=";
  for (int a = 0; a < g.dim(); ++a) os << (a ? "," : "") << g.cells[a];
  os << "\n";
  std::vector<std::int64_t> idx(g.dim());
  for (std::size_t i = 0; i < f.size(); ++i) {
    g.unflatten(i, idx);
    for (auto k : idx) os << k << ",";
    os << num(f[i].real()) << "," << num(f[i].imag()) << "\n";
  }
}

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw InvalidArgument("malformed number '" + s + "'");
  }
  if (used != s.size()) throw InvalidArgument("malformed number '" + s + "'");
  return v;
}

}  // namespace

SampledFunction read_csv(std::istream& is) {
  int n = 0;
  double h = 0.0;
  std::vector<double> lo;
  std::vector<std::int64_t> cells;
  std::string line;
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::string key = line.substr(1, eq - 1);
      key.erase(0, key.find_first_not_of(' '));
      const std::string val = line.substr(eq + 1);
      if (key == "n") n = static_cast<int>(parse_double(val));
      else if (key == "h") h = parse_double(val);
      else if (key == "lo") for (const auto& s : split(val, ',')) lo.push_back(parse_double(s));
      else if (key == "cells") for (const auto& s : split(val, ',')) cells.push_back(static_cast<std::int64_t>(parse_double(s)));
      continue;
    }
    rows.push_back(split(line, ','));
  }
  if (n < 1 || static_cast<int>(lo.size()) != n || static_cast<int>(cells.size()) != n) {
    throw InvalidArgument("CSV header incomplete");
  }
  GridSpec g(lo, cells, h);
  std::vector<Complex> v(g.size());
  std::vector<std::int64_t> idx(n);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != n + 2) throw InvalidArgument("CSV row has wrong arity");
    for (int a = 0; a < n; ++a) {
      idx[a] = static_cast<std::int64_t>(parse_double(r[a]));
      if (idx[a] < 0 || idx[a] >= cells[a]) throw InvalidArgument("CSV cell index out of range");
    }
    v[g.flat(idx)] = Complex(parse_double(r[n]), parse_double(r[n + 1]));
  }
  return SampledFunction(g, std::move(v));
}

namespace {

static_assert(std::endian::native == std::endian::little, "binary format assumes little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v)) throw InvalidArgument("truncated binary function file");
  return v;
}

}  // namespace

void write_binary(std::ostream& os, const SampledFunction& f) {
  const GridSpec& g = f.grid();
  os.write("MLGF", 4);
  put<std::uint32_t>(os, 1);
  put<std::uint32_t>(os, static_cast<std::uint32_t>(g.dim()));
  put<std::uint32_t>(os, 0);
  put<double>(os, g.h);
  for (double l : g.lo) put<double>(os, l);
  for (auto c : g.cells) put<std::uint64_t>(os, static_cast<std::uint64_t>(c));
  for (const auto& v : f.values()) {
    put<double>(os, v.real());
    put<double>(os, v.imag());
  }
}

SampledFunction read_binary(std::istream& is) {
  char magic[4];
  if (!is.read(magic, 4) || std::memcmp(magic, "MLGF", 4) != 0) throw InvalidArgument("bad magic");
  if (get<std::uint32_t>(is) != 1) throw InvalidArgument("unsupported binary version");
  const auto n = get<std::uint32_t>(is);
  get<std::uint32_t>(is);
  if (n < 1 || n > 16) throw InvalidArgument("bad dimension in binary header");
  const double h = get<double>(is);
  std::vector<double> lo(n);
  std::vector<std::int64_t> cells(n);
  for (auto& l : lo) l = get<double>(is);
  for (auto& c : cells) c = static_cast<std::int64_t>(get<std::uint64_t>(is));
  GridSpec g(lo, cells, h);
  std::vector<Complex> v(g.size());
  for (auto& x : v) {
    const double re = get<double>(is);
    const double im = get<double>(is);
    x = Complex(re, im);
  }
  return SampledFunction(g, std::move(v));
}

SampledFunction load_function(const std::string& path) {
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  std::ifstream in(path, csv ? std::ios::in : std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  return csv ? read_csv(in) : read_binary(in);
}

void save_function(const std::string& path, const SampledFunction& f) {
  const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
  std::ofstream out(path, csv ? std::ios::out : std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  if (csv) write_csv(out, f);
  else write_binary(out, f);
}

}  // namespace mltb
