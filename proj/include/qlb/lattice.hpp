#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qlb/numerics.hpp"

namespace qlb {

// Couplings of the nonlinear Dirac family: mass m >= 0, vector coupling
// alpha, scalar coupling beta. (alpha=1, beta=0) is the Thirring point,
// (alpha=0, beta=1/4) the Gross-Neveu point.
struct ModelParams {
  double m = 0.0;
  double alpha = 0.0;
  double beta = 0.0;

  void validate() const {
    if (!std::isfinite(m) || !std::isfinite(alpha) || !std::isfinite(beta))
      throw std::invalid_argument("ModelParams: nonfinite coupling");
    if (m < 0.0) throw std::invalid_argument("ModelParams: mass must be nonnegative");
  }

  static ModelParams thirring(double m) { return {m, 1.0, 0.0}; }
  static ModelParams gross_neveu(double m) { return {m, 0.0, 0.25}; }

  bool is_thirring() const { return alpha == 1.0 && beta == 0.0; }
  bool is_gross_neveu() const { return alpha == 0.0 && beta == 0.25; }
};

// Uniform 1D lattice window: sites n in [n_min, n_max], site n at x = n*h,
// time level k at t = k*h (the scheme is unit-CFL, one h for both axes).
struct Grid {
  double h = 0.0;
  long n_min = 0;
  long n_max = 0;
  long k = 0;

  void validate() const {
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("Grid: h must be positive");
    if (n_min > n_max) throw std::invalid_argument("Grid: empty window");
  }

  std::size_t size() const { return static_cast<std::size_t>(n_max - n_min + 1); }
  double x(long n) const { return static_cast<double>(n) * h; }
  double t() const { return static_cast<double>(k) * h; }
  bool contains(long n) const { return n >= n_min && n <= n_max; }
};

// Two-component complex state on a grid window; sites outside the window
// are implicitly zero everywhere in this library.
struct SpinorField {
  Grid grid;
  std::vector<cplx> u;
  std::vector<cplx> v;

  void validate() const {
    grid.validate();
    if (u.size() != grid.size() || v.size() != grid.size())
      throw std::invalid_argument("SpinorField: component size does not match window");
  }

  std::size_t size() const { return grid.size(); }
  std::size_t index(long n) const { return static_cast<std::size_t>(n - grid.n_min); }
  cplx u_at(long n) const { return grid.contains(n) ? u[index(n)] : cplx{0.0, 0.0}; }
  cplx v_at(long n) const { return grid.contains(n) ? v[index(n)] : cplx{0.0, 0.0}; }

  static SpinorField zeros(const Grid& g) {
    SpinorField f;
    f.grid = g;
    f.u.assign(g.size(), cplx{0.0, 0.0});
    f.v.assign(g.size(), cplx{0.0, 0.0});
    return f;
  }
};

// Real bilinear coupling the scalar interaction runs through:
// conj(u)*v + u*conj(v) = 2*Re(conj(u)*v), exactly real by construction.
inline double g_bilinear(cplx u, cplx v) {
  return 2.0 * (u.real() * v.real() + u.imag() * v.imag());
}

struct InitialData {
  std::function<cplx(double)> u0;
  std::function<cplx(double)> v0;
  // [lo, hi] outside of which both components are zero or numerically
  // negligible; sampling refuses windows that truncate it.
  std::optional<std::pair<double, double>> support_hint;
};

struct SamplingMethod {
  enum class Kind { point, cell_average };
  Kind kind = Kind::point;
  int order = 4;  // Gauss-Legendre points per cell for cell_average

  static SamplingMethod point_sample() { return {Kind::point, 0}; }
  static SamplingMethod cell_average(int q = 4) { return {Kind::cell_average, q}; }
};

namespace detail {

// Cell mean via Gauss-Legendre, written as midpoint value plus weighted
// deviations so data that is constant on the cell is reproduced exactly.
inline cplx cell_mean(const std::function<cplx(double)>& f, double x_lo, double h, int q) {
  const GaussRule& rule = gauss_legendre(q);
  const cplx mid = f(x_lo + 0.5 * h);
  KahanSum re, im;
  for (int i = 0; i < q; ++i) {
    cplx d = f(x_lo + rule.nodes[i] * h) - mid;
    re.add(rule.weights[i] * d.real());
    im.add(rule.weights[i] * d.imag());
  }
  return mid + cplx{re.value(), im.value()};
}

}  // namespace detail

inline SpinorField sample_initial(const InitialData& data, const Grid& grid,
                                  const SamplingMethod& method = SamplingMethod::point_sample()) {
  grid.validate();
  if (!data.u0 || !data.v0) throw std::invalid_argument("sample_initial: missing component closure");
  if (method.kind == SamplingMethod::Kind::cell_average && (method.order < 1 || method.order > 256))
    throw std::invalid_argument("sample_initial: cell-average order must be in [1,256]");
  if (data.support_hint) {
    const double slack = 1e-12 * std::max(1.0, std::max(std::abs(data.support_hint->first),
                                                        std::abs(data.support_hint->second)));
    if (grid.x(grid.n_min) > data.support_hint->first + slack ||
        grid.x(grid.n_max + 1) < data.support_hint->second - slack)
      throw std::invalid_argument("sample_initial: grid window truncates declared support");
  }

  SpinorField f = SpinorField::zeros(grid);
  for (long n = grid.n_min; n <= grid.n_max; ++n) {
    const std::size_t i = f.index(n);
    if (method.kind == SamplingMethod::Kind::point) {
      f.u[i] = data.u0(grid.x(n));
      f.v[i] = data.v0(grid.x(n));
    } else {
      f.u[i] = detail::cell_mean(data.u0, grid.x(n), grid.h, method.order);
      f.v[i] = detail::cell_mean(data.v0, grid.x(n), grid.h, method.order);
    }
  }
  return f;
}

// Discrete charge h * sum_n (|u_n|^2 + |v_n|^2), compensated.
inline double charge(const SpinorField& f) {
  KahanSum s;
  for (std::size_t i = 0; i < f.u.size(); ++i) {
    s.add(abs2(f.u[i]));
    s.add(abs2(f.v[i]));
  }
  return f.grid.h * s.value();
}

// Exact L2 distance between the piecewise-constant interpolants of two
// fields (cell n carries the value on [n*h, (n+1)*h)), zero-extended
// outside their windows. Grids may differ in h and window.
inline double l2_distance_pc(const SpinorField& f, const SpinorField& g) {
  f.validate();
  g.validate();
  const double f_lo = f.grid.x(f.grid.n_min), f_hi = f.grid.x(f.grid.n_max + 1);
  const double g_lo = g.grid.x(g.grid.n_min), g_hi = g.grid.x(g.grid.n_max + 1);
  const double lo = std::min(f_lo, g_lo);
  const double hi = std::max(f_hi, g_hi);
  if (!(lo < hi)) return 0.0;

  KahanSum acc;
  long nf = static_cast<long>(std::floor(lo / f.grid.h + 0.5));  // next f breakpoint index
  long ng = static_cast<long>(std::floor(lo / g.grid.h + 0.5));
  // advance to the first breakpoint strictly above lo
  while (static_cast<double>(nf) * f.grid.h <= lo) ++nf;
  while (static_cast<double>(ng) * g.grid.h <= lo) ++ng;
  double x = lo;
  while (x < hi) {
    const double bf = static_cast<double>(nf) * f.grid.h;
    const double bg = static_cast<double>(ng) * g.grid.h;
    double x_next = std::min(std::min(bf, bg), hi);
    if (!(x_next > x)) {  // defensive: force progress on degenerate rounding
      x_next = std::nextafter(x, hi);
    }
    const double mid = 0.5 * (x + x_next);
    const long cf = static_cast<long>(std::floor(mid / f.grid.h));
    const long cg = static_cast<long>(std::floor(mid / g.grid.h));
    const cplx du = f.u_at(cf) - g.u_at(cg);
    const cplx dv = f.v_at(cf) - g.v_at(cg);
    const double len = x_next - x;
    acc.add(len * abs2(du));
    acc.add(len * abs2(dv));
    if (bf <= x_next) ++nf;
    if (bg <= x_next) ++ng;
    x = x_next;
  }
  return std::sqrt(std::max(0.0, acc.value()));
}

// Index shift: output site n carries the input at n + n0 (a feature at
// site 3 moves to site 2 under n0 = 1). The charge is invariant bitwise:
// the arrays are unchanged, only the window labels move.
inline SpinorField shift_field(const SpinorField& f, long n0) {
  SpinorField g = f;
  g.grid.n_min = f.grid.n_min - n0;
  g.grid.n_max = f.grid.n_max - n0;
  return g;
}

}  // namespace qlb
