#include "mltb/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mltb/errors.hpp"

namespace mltb {

double Stencil::sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

Stencil radial_stencil(int dim, double h, double radius, const std::function<double(double)>& g) {
  if (dim < 1 || !(h > 0.0) || !(radius >= 0.0)) throw InvalidArgument("bad stencil parameters");
  const auto k = static_cast<std::int64_t>(std::floor(radius / h));
  Stencil s;
  s.dim = dim;
  const double vol = std::pow(h, dim);
  std::vector<std::int64_t> off(dim, -k);
  while (true) {
    double r2 = 0.0;
    for (auto o : off) r2 += static_cast<double>(o * o);
    const double r = std::sqrt(r2) * h;
    if (r <= radius) {
      s.offsets.insert(s.offsets.end(), off.begin(), off.end());
      s.weights.push_back(g(r) * vol);
    }
    int a = dim - 1;
    while (a >= 0 && ++off[a] > k) {
      off[a] = -k;
      --a;
    }
    if (a < 0) break;
  }
  return s;
}

namespace {

// One output cell of the convolution; the only place the sum is formed, so
// serial and OpenMP paths agree bit for bit.
inline Complex convolve_cell(const GridSpec& grid, std::span<const Complex> in,
                             const Stencil& st, std::span<const std::int64_t> idx,
                             std::int64_t* src) {
  const int n = grid.dim();
  Complex acc{};
  const std::size_t taps = st.taps();
  for (std::size_t j = 0; j < taps; ++j) {
    const std::int64_t* off = &st.offsets[j * n];
    bool ok = true;
    for (int a = 0; a < n; ++a) {
      src[a] = idx[a] - off[a];
      if (src[a] < 0 || src[a] >= grid.cells[a]) {
        ok = false;
        break;
      }
    }
    if (ok) acc += st.weights[j] * in[grid.flat(std::span<const std::int64_t>(src, n))];
  }
  return acc;
}

// Fast 1-D path: contiguous source range, same summation order as convolve_cell.
inline Complex convolve_cell_1d(std::span<const Complex> in, const Stencil& st, std::int64_t i,
                                std::int64_t cells) {
  Complex acc{};
  const std::size_t taps = st.taps();
  for (std::size_t j = 0; j < taps; ++j) {
    const std::int64_t s = i - st.offsets[j];
    if (s >= 0 && s < cells) acc += st.weights[j] * in[static_cast<std::size_t>(s)];
  }
  return acc;
}

}  // namespace

void convolve(const GridSpec& grid, std::span<const Complex> in, const Stencil& stencil,
              std::span<Complex> out, Exec exec) {
  if (stencil.dim != grid.dim()) throw InvalidArgument("stencil and grid dimensions differ");
  if (in.size() != grid.size() || out.size() != grid.size()) throw InvalidArgument("buffer size mismatch");
  const auto total = static_cast<std::int64_t>(grid.size());
  const int n = grid.dim();

  if (n == 1) {
    const std::int64_t cells = grid.cells[0];
    if (exec == Exec::serial) {
      for (std::int64_t i = 0; i < total; ++i) out[i] = convolve_cell_1d(in, stencil, i, cells);
    } else {
#pragma omp parallel for schedule(static)
      for (std::int64_t i = 0; i < total; ++i) out[i] = convolve_cell_1d(in, stencil, i, cells);
    }
    return;
  }

  if (exec == Exec::serial) {
    std::vector<std::int64_t> idx(n), src(n);
    for (std::int64_t i = 0; i < total; ++i) {
      grid.unflatten(static_cast<std::size_t>(i), idx);
      out[i] = convolve_cell(grid, in, stencil, idx, src.data());
    }
    return;
  }
#pragma omp parallel
  {
    std::vector<std::int64_t> idx(n), src(n);
#pragma omp for schedule(static)
    for (std::int64_t i = 0; i < total; ++i) {
      grid.unflatten(static_cast<std::size_t>(i), idx);
      out[i] = convolve_cell(grid, in, stencil, idx, src.data());
    }
  }
}

SampledFunction convolve(const SampledFunction& f, const Stencil& stencil, Exec exec) {
  std::vector<Complex> out(f.size());
  convolve(f.grid(), f.values(), stencil, out, exec);
  return SampledFunction(f.grid(), std::move(out));
}

SupportSamples support_samples(const SampledFunction& f) {
  SupportSamples s;
  const GridSpec& g = f.grid();
  s.dim = g.dim();
  const double vol = g.cell_volume();
  std::vector<double> x(g.dim());
  for (std::size_t i = 0; i < f.size(); ++i) {
    if (f[i] == Complex{}) continue;
    g.center(i, x);
    s.points.insert(s.points.end(), x.begin(), x.end());
    s.weights.push_back(f[i] * vol);
  }
  return s;
}

namespace {

Complex tensor_at(const ThetaEval& theta, double t, std::span<const double> x,
                  std::span<const SupportSamples> slots, std::vector<double>& ys,
                  std::vector<std::size_t>& pick) {
  const std::size_t m = slots.size();
  const int n = slots[0].dim;
  for (const auto& s : slots) {
    if (s.size() == 0) return {};
  }
  std::fill(pick.begin(), pick.end(), 0);
  Complex acc{};
  while (true) {
    Complex w{1.0, 0.0};
    for (std::size_t i = 0; i < m; ++i) {
      const auto& s = slots[i];
      std::copy_n(&s.points[pick[i] * n], n, &ys[i * n]);
      w *= s.weights[pick[i]];
    }
    acc += theta(t, x, ys) * w;
    std::size_t i = m;
    while (i > 0) {
      --i;
      if (++pick[i] < slots[i].size()) break;
      pick[i] = 0;
      if (i == 0) return acc;
    }
  }
}

}  // namespace

std::vector<Complex> tensor_theta(const ThetaEval& theta, double t, const GridSpec& grid,
                                  std::span<const SupportSamples> slots, Exec exec) {
  if (slots.empty()) throw InvalidArgument("tensor quadrature needs at least one slot");
  const std::size_t m = slots.size();
  const int n = grid.dim();
  const auto total = static_cast<std::int64_t>(grid.size());
  std::vector<Complex> out(grid.size());
  if (exec == Exec::serial) {
    std::vector<double> x(n), ys(m * n);
    std::vector<std::size_t> pick(m);
    for (std::int64_t i = 0; i < total; ++i) {
      grid.center(static_cast<std::size_t>(i), x);
      out[i] = tensor_at(theta, t, x, slots, ys, pick);
    }
    return out;
  }
#pragma omp parallel
  {
    std::vector<double> x(n), ys(m * n);
    std::vector<std::size_t> pick(m);
#pragma omp for schedule(dynamic, 16)
    for (std::int64_t i = 0; i < total; ++i) {
      grid.center(static_cast<std::size_t>(i), x);
      out[i] = tensor_at(theta, t, x, slots, ys, pick);
    }
  }
  return out;
}

std::vector<std::int64_t> cell_distances(const CellMask& mask, Exec exec) {
  const int n = mask.dim();
  const std::size_t total = mask.size();

  // Complement cells with a set cell among their 3^n - 1 neighbours; the
  // nearest complement cell of any set cell is always one of these.
  std::vector<std::int64_t> boundary;
  std::vector<std::int64_t> idx(n), nb(n), d(n);
  for (std::size_t f = 0; f < total; ++f) {
    if (mask.inside[f]) continue;
    mask.unflatten(f, idx);
    bool touches = false;
    std::fill(d.begin(), d.end(), -1);
    while (!touches) {
      bool centre = true, ok = true;
      for (int a = 0; a < n; ++a) {
        nb[a] = idx[a] + d[a];
        if (d[a] != 0) centre = false;
        if (nb[a] < 0 || nb[a] >= mask.cells[a]) ok = false;
      }
      if (ok && !centre && mask.inside[mask.flat(nb)]) touches = true;
      int a = n - 1;
      while (a >= 0 && ++d[a] > 1) {
        d[a] = -1;
        --a;
      }
      if (a < 0) break;
    }
    if (touches) boundary.insert(boundary.end(), idx.begin(), idx.end());
  }
  const std::size_t nb_count = boundary.size() / static_cast<std::size_t>(n);

  std::vector<std::int64_t> out(total, 0);
  auto cell_distance = [&](std::size_t f, std::int64_t* p) {
    mask.unflatten(f, std::span<std::int64_t>(p, n));
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    for (int a = 0; a < n; ++a) {
      const std::int64_t g = std::min(p[a], mask.cells[a] - p[a] - 1);
      best = std::min(best, g * g);
    }
    for (std::size_t b = 0; b < nb_count; ++b) {
      const std::int64_t* c = &boundary[b * n];
      std::int64_t s = 0;
      for (int a = 0; a < n; ++a) {
        const std::int64_t g = std::max<std::int64_t>({0, c[a] - p[a] - 1, p[a] - c[a] - 1});
        s += g * g;
      }
      best = std::min(best, s);
    }
    return best;
  };

  const auto total_i = static_cast<std::int64_t>(total);
  if (exec == Exec::serial) {
    std::vector<std::int64_t> p(n);
    for (std::int64_t f = 0; f < total_i; ++f) {
      if (mask.inside[f]) out[f] = cell_distance(static_cast<std::size_t>(f), p.data());
    }
    return out;
  }
#pragma omp parallel
  {
    std::vector<std::int64_t> p(n);
#pragma omp for schedule(dynamic, 64)
    for (std::int64_t f = 0; f < total_i; ++f) {
      if (mask.inside[f]) out[f] = cell_distance(static_cast<std::size_t>(f), p.data());
    }
  }
  return out;
}

}  // namespace mltb
