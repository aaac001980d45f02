#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "qlb/functionals.hpp"
#include "qlb/lattice.hpp"
#include "qlb/numerics.hpp"
#include "qlb/stepper.hpp"

namespace qlb {

// Closed-form space-time pair used as a manufactured reference. u and v are
// the component values; du_adv and dv_adv are the advective derivatives
// (d_t + d_x)u and (d_t - d_x)v, required to form continuum sources. Both
// components must be numerically negligible (< 1e-14) outside
// [support_lo, support_hi] widened by |t| on each side.
struct SmoothPair {
  std::string descriptor;
  std::function<cplx(double, double)> u, v;
  std::function<cplx(double, double)> du_adv, dv_adv;
  double support_lo = 0.0;
  double support_hi = 0.0;

  void validate() const {
    if (!u || !v || !du_adv || !dv_adv)
      throw std::invalid_argument("SmoothPair: missing closure");
    if (!(support_lo < support_hi))
      throw std::invalid_argument("SmoothPair: empty support interval");
  }
};

// Continuum nonlinearity entering the sources. The scheme's trapezoid terms
// correspond to N1 = alpha*u|v|^2 + beta*G*v (and symmetrically N2); the
// alternative convention obtained by differentiating the quartic potential
// in conj(u) carries 2*beta and is kept available as a toggle.
enum class NonlinearityConvention { scheme_consistent, wbar_gradient };

inline cplx n1_term(cplx u, cplx v, const ModelParams& p,
                    NonlinearityConvention c = NonlinearityConvention::scheme_consistent) {
  double bg = p.beta * g_bilinear(u, v);
  if (c == NonlinearityConvention::wbar_gradient) bg *= 2.0;
  return p.alpha * u * abs2(v) + bg * v;
}

inline cplx n2_term(cplx u, cplx v, const ModelParams& p,
                    NonlinearityConvention c = NonlinearityConvention::scheme_consistent) {
  double bg = p.beta * g_bilinear(u, v);
  if (c == NonlinearityConvention::wbar_gradient) bg *= 2.0;
  return p.alpha * v * abs2(u) + bg * u;
}

// Sources that make the pair an exact solution of the forced system
//   u_t + u_x = i(m v + N1(u,v)) + F1,   v_t - v_x = i(m u + N2(u,v)) + F2.
inline cplx source_f1(const SmoothPair& pair, const ModelParams& p, double x, double t,
                      NonlinearityConvention c = NonlinearityConvention::scheme_consistent) {
  const cplx uu = pair.u(x, t), vv = pair.v(x, t);
  return pair.du_adv(x, t) - cplx{0.0, 1.0} * (p.m * vv + n1_term(uu, vv, p, c));
}

inline cplx source_f2(const SmoothPair& pair, const ModelParams& p, double x, double t,
                      NonlinearityConvention c = NonlinearityConvention::scheme_consistent) {
  const cplx uu = pair.u(x, t), vv = pair.v(x, t);
  return pair.dv_adv(x, t) - cplx{0.0, 1.0} * (p.m * uu + n2_term(uu, vv, p, c));
}

// Point sample of a pair on a grid window at the grid's own level.
inline SpinorField sample_pair_level(const SmoothPair& pair, const Grid& grid) {
  pair.validate();
  grid.validate();
  SpinorField f = SpinorField::zeros(grid);
  const double t = grid.t();
  for (long n = grid.n_min; n <= grid.n_max; ++n) {
    f.u[f.index(n)] = pair.u(grid.x(n), t);
    f.v[f.index(n)] = pair.v(grid.x(n), t);
  }
  return f;
}

// Exact per-node forcing that the one-step map would need to reproduce
// level_k1 from level_k: rearranges the forced scheme for g. By
// construction, step_forced(level_k, result) returns level_k1 up to the
// 2x2 solve rounding.
inline ForcingLevel discrete_residual(const SpinorField& level_k, const SpinorField& level_k1,
                                      const ModelParams& p) {
  level_k.validate();
  level_k1.validate();
  p.validate();
  if (level_k.grid.h != level_k1.grid.h)
    throw std::invalid_argument("discrete_residual: step sizes disagree");
  if (level_k1.grid.k != level_k.grid.k + 1)
    throw std::invalid_argument("discrete_residual: levels are not consecutive");
  if (level_k1.grid.n_min > level_k.grid.n_min - 1 || level_k1.grid.n_max < level_k.grid.n_max + 1)
    throw std::invalid_argument("discrete_residual: upper window must cover the lower one widened by 1");

  const double h = level_k.grid.h;
  const cplx ih{0.0, 1.0};
  ForcingLevel out = ForcingLevel::zeros(level_k.grid.n_min, level_k.grid.n_max);
  for (long n = level_k.grid.n_min; n <= level_k.grid.n_max; ++n) {
    const cplx u = level_k.u[level_k.index(n)];
    const cplx v = level_k.v[level_k.index(n)];
    const cplx uh = level_k1.u_at(n + 1);
    const cplx vh = level_k1.v_at(n - 1);
    const double g = g_bilinear(u, v);
    out.g1[out.index(n)] = (uh - u) / h - ih * (0.5 * p.m) * (vh + v) -
                           ih * (0.5 * p.alpha) * (uh + u) * abs2(v) -
                           ih * (0.5 * p.beta) * (vh + v) * g;
    out.g2[out.index(n)] = (vh - v) / h - ih * (0.5 * p.m) * (uh + u) -
                           ih * (0.5 * p.alpha) * (vh + v) * abs2(u) -
                           ih * (0.5 * p.beta) * (uh + u) * g;
  }
  return out;
}

// Characteristic-integral residual of a smooth pair: the forcing the scheme
// needs at level grid.k when the right-hand side is integrated exactly
// (Gauss-Legendre of the given order) along each characteristic instead of
// by the scheme's trapezoid-type average.
inline ForcingLevel characteristic_residual(
    const SmoothPair& pair, const ModelParams& p, const Grid& grid, int quad_order = 6,
    NonlinearityConvention c = NonlinearityConvention::scheme_consistent) {
  pair.validate();
  p.validate();
  grid.validate();
  const GaussRule& rule = gauss_legendre(quad_order);
  const double h = grid.h;
  const double t0 = grid.t();
  const cplx ih{0.0, 1.0};

  ForcingLevel out = ForcingLevel::zeros(grid.n_min, grid.n_max);
  for (long n = grid.n_min; n <= grid.n_max; ++n) {
    const double x0 = grid.x(n);
    const cplx u = pair.u(x0, t0);
    const cplx v = pair.v(x0, t0);
    const cplx uh = pair.u(x0 + h, t0 + h);
    const cplx vh = pair.v(x0 - h, t0 + h);
    const double g = g_bilinear(u, v);

    KahanSum i1re, i1im, i2re, i2im;
    for (int q = 0; q < quad_order; ++q) {
      const double tau = rule.nodes[q];
      const double w = rule.weights[q];
      // right characteristic through (x0, t0)
      {
        const double x = x0 + tau * h, t = t0 + tau * h;
        const cplx uu = pair.u(x, t), vv = pair.v(x, t);
        const cplx val = ih * (p.m * vv + n1_term(uu, vv, p, c));
        i1re.add(w * val.real());
        i1im.add(w * val.imag());
      }
      // left characteristic
      {
        const double x = x0 - tau * h, t = t0 + tau * h;
        const cplx uu = pair.u(x, t), vv = pair.v(x, t);
        const cplx val = ih * (p.m * uu + n2_term(uu, vv, p, c));
        i2re.add(w * val.real());
        i2im.add(w * val.imag());
      }
    }
    out.g1[out.index(n)] = cplx{i1re.value(), i1im.value()} - ih * (0.5 * p.m) * (vh + v) -
                           ih * (0.5 * p.alpha) * (uh + u) * abs2(v) -
                           ih * (0.5 * p.beta) * (vh + v) * g;
    out.g2[out.index(n)] = cplx{i2re.value(), i2im.value()} - ih * (0.5 * p.m) * (uh + u) -
                           ih * (0.5 * p.alpha) * (vh + v) * abs2(u) -
                           ih * (0.5 * p.beta) * (uh + u) * g;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Studies

struct StudyConfig {
  ModelParams params;
  double T = 1.0;
  std::vector<double> h_list;
  SamplingMethod sampling = SamplingMethod::cell_average(4);
  int quadrature_order = 6;
  double K = 10.0;
  NonlinearityConvention convention = NonlinearityConvention::scheme_consistent;
  double window_pad = 1.0;

  void validate() const {
    params.validate();
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("StudyConfig: T must be positive");
    if (h_list.empty()) throw std::invalid_argument("StudyConfig: empty h list");
    for (std::size_t i = 0; i < h_list.size(); ++i) {
      if (!(h_list[i] > 0.0)) throw std::invalid_argument("StudyConfig: h must be positive");
      if (i > 0 && !(h_list[i] < h_list[i - 1]))
        throw std::invalid_argument("StudyConfig: h list must be strictly decreasing");
      const double steps = std::round(T / h_list[i]);
      if (steps < 1 || std::abs(steps * h_list[i] - T) > 1e-12 * std::max(1.0, T))
        throw std::invalid_argument("StudyConfig: h = " + format_double(h_list[i]) +
                                    " does not divide T");
    }
    if (!(K > 0.0)) throw std::invalid_argument("StudyConfig: K must be positive");
    if (quadrature_order < 1 || quadrature_order > 256)
      throw std::invalid_argument("StudyConfig: quadrature order must be in [1,256]");
    if (!(window_pad >= 0.0)) throw std::invalid_argument("StudyConfig: negative window pad");
  }

  long steps_for(double h) const { return static_cast<long>(std::round(T / h)); }
};

struct ConvergenceRow {
  double h = 0.0;
  long steps = 0;
  double error = 0.0;
  // log2(e(coarser)/e(this)) when the previous row has exactly twice this h
  double observed_order = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
  std::string label;
  std::vector<ConvergenceRow> rows;
  double fitted_slope = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

inline void attach_orders(ConvergenceTable& table, double error_floor = 1e-13) {
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    const double ratio = table.rows[i - 1].h / table.rows[i].h;
    if (std::abs(ratio - 2.0) < 1e-9 && table.rows[i].error > 0.0)
      table.rows[i].observed_order = std::log2(table.rows[i - 1].error / table.rows[i].error);
  }
  std::vector<double> hs, es;
  for (const auto& r : table.rows)
    if (r.error > error_floor) {
      hs.push_back(r.h);
      es.push_back(r.error);
    }
  if (hs.size() >= 2) table.fitted_slope = loglog_slope(hs, es);
}

inline Grid base_window(double lo, double hi, double h, double pad, long k = 0) {
  Grid g;
  g.h = h;
  g.n_min = static_cast<long>(std::floor((lo - pad) / h)) - 1;
  g.n_max = static_cast<long>(std::ceil((hi + pad) / h)) + 1;
  g.k = k;
  return g;
}

inline double sup_mod(const SpinorField& f) {
  double m = 0.0;
  for (const cplx& z : f.u) m = std::max(m, std::abs(z));
  for (const cplx& z : f.v) m = std::max(m, std::abs(z));
  return m;
}

}  // namespace detail

// Measures how far the per-node residual of point-sampled levels is from
// the continuum source evaluated at the characteristic midpoints; the gap
// contracts at first order for smooth pairs. One row per h.
inline ConvergenceTable consistency_study(const SmoothPair& pair, const StudyConfig& config) {
  pair.validate();
  config.validate();
  ConvergenceTable table;
  table.label = "consistency:" + pair.descriptor;

  for (double h : config.h_list) {
    const long steps = config.steps_for(h);
    // the pair's support can spread at unit speed over [0, T]
    const Grid base =
        detail::base_window(pair.support_lo - config.T, pair.support_hi + config.T, h,
                            config.window_pad);
    double err = 0.0;
    Grid gk = base;
    SpinorField cur = sample_pair_level(pair, gk);
    for (long k = 0; k < steps; ++k) {
      Grid gk1 = gk;
      gk1.n_min -= 1;
      gk1.n_max += 1;
      gk1.k = k + 1;
      SpinorField nxt = sample_pair_level(pair, gk1);
      const ForcingLevel g = discrete_residual(cur, nxt, config.params);
      const double t_mid = (static_cast<double>(k) + 0.5) * h;
      for (long n = gk.n_min; n <= gk.n_max; ++n) {
        const double x = static_cast<double>(n) * h;
        const cplx f1 = source_f1(pair, config.params, x + 0.5 * h, t_mid, config.convention);
        const cplx f2 = source_f2(pair, config.params, x - 0.5 * h, t_mid, config.convention);
        err = std::max(err, std::abs(g.g1[g.index(n)] - f1));
        err = std::max(err, std::abs(g.g2[g.index(n)] - f2));
      }
      cur = std::move(nxt);
      gk = gk1;
    }
    table.rows.push_back({h, steps, err, std::numeric_limits<double>::quiet_NaN()});
  }
  detail::attach_orders(table);
  return table;
}

// Round-trip defect of the residual construction: sample the pair on
// `steps + 1` consecutive levels, extract the exact per-level forcing, and
// re-run the forced scheme from the first sampled level. Returns the max
// over levels of the sup-norm defect relative to the pair's sup modulus.
inline double residual_roundtrip_error(const SmoothPair& pair, const ModelParams& params, double h,
                                       long steps, double pad = 1.0) {
  pair.validate();
  params.validate();
  if (steps < 1) throw std::invalid_argument("residual_roundtrip_error: need at least one step");

  std::vector<SpinorField> sampled;
  sampled.reserve(static_cast<std::size_t>(steps) + 1);
  Grid g = detail::base_window(pair.support_lo - static_cast<double>(steps) * h,
                               pair.support_hi + static_cast<double>(steps) * h, h, pad);
  double scale = 0.0;
  for (long k = 0; k <= steps; ++k) {
    sampled.push_back(sample_pair_level(pair, g));
    scale = std::max(scale, detail::sup_mod(sampled.back()));
    g.n_min -= 1;
    g.n_max += 1;
    g.k += 1;
  }
  if (scale == 0.0) return 0.0;

  std::vector<ForcingLevel> forcing;
  forcing.reserve(static_cast<std::size_t>(steps));
  for (long k = 0; k < steps; ++k)
    forcing.push_back(discrete_residual(sampled[static_cast<std::size_t>(k)],
                                        sampled[static_cast<std::size_t>(k) + 1], params));

  SpinorField f = sampled.front();
  double worst = 0.0;
  for (long k = 0; k < steps; ++k) {
    f = step_forced(f, forcing[static_cast<std::size_t>(k)], params).first;
    const SpinorField& ref = sampled[static_cast<std::size_t>(k) + 1];
    for (long n = f.grid.n_min; n <= f.grid.n_max; ++n) {
      worst = std::max(worst, std::abs(f.u[f.index(n)] - ref.u_at(n)));
      worst = std::max(worst, std::abs(f.v[f.index(n)] - ref.v_at(n)));
    }
  }
  return worst / scale;
}

// Self-convergence under mesh halving: evolve the same data at every h in
// the list and measure, for each adjacent pair of resolutions, the sup over
// the 17 equispaced times {0, T/16, ..., T} of the exact piecewise-constant
// L2 distance. Row i describes h_list[i] against h_list[i+1].
inline ConvergenceTable self_convergence_study(const InitialData& data, const StudyConfig& config) {
  config.validate();
  if (config.h_list.size() < 2)
    throw std::invalid_argument("self_convergence_study: need at least two resolutions");
  if (!data.support_hint)
    throw std::invalid_argument("self_convergence_study: initial data needs a support hint");

  ConvergenceTable table;
  table.label = "self-convergence";
  std::vector<std::vector<SpinorField>> snaps;  // per h: 17 fields
  for (double h : config.h_list) {
    const long steps = config.steps_for(h);
    if (steps % 16 != 0)
      throw std::invalid_argument(
          "self_convergence_study: step count at h = " + format_double(h) +
          " is not divisible by 16, sample times do not land on levels");
    const Grid base = detail::base_window(data.support_hint->first, data.support_hint->second, h,
                                          config.window_pad);
    SpinorField f = sample_initial(data, base, config.sampling);
    std::vector<SpinorField> fields;
    fields.reserve(17);
    fields.push_back(f);
    const long stride = steps / 16;
    for (int j = 0; j < 16; ++j) {
      f = evolve(std::move(f), config.params, stride);
      fields.push_back(f);
    }
    snaps.push_back(std::move(fields));
  }

  for (std::size_t i = 0; i + 1 < snaps.size(); ++i) {
    double err = 0.0;
    for (std::size_t j = 0; j < snaps[i].size(); ++j)
      err = std::max(err, l2_distance_pc(snaps[i][j], snaps[i + 1][j]));
    table.rows.push_back({config.h_list[i], config.steps_for(config.h_list[i]), err,
                          std::numeric_limits<double>::quiet_NaN()});
  }
  detail::attach_orders(table);
  return table;
}

// ---------------------------------------------------------------------------
// Shift stability

struct ShiftStabilityEntry {
  double h = 0.0;
  long n0 = 0;                 // shift in sites at this h
  TriangleDomain tri;          // triangle in sites/levels at this h
  FunctionalTrace trace;
  double f1_ratio_max = 0.0;   // max_k F1(k)/F1(k0), 0/0 read as 0
  // (t, L2 shift-difference over the whole line) at up to 17 levels
  std::vector<std::pair<double, double>> strip;
};

// Compares a trajectory with its own shift by n0 sites through the triangle
// functionals. `tri` and `n0` are given in index units of the FIRST h in
// the list and are scaled by the integer refinement factor for the rest,
// so every entry describes the same physical triangle and shift.
inline std::vector<ShiftStabilityEntry> shift_stability_study(const InitialData& data, long n0,
                                                              const StudyConfig& config,
                                                              const TriangleDomain& tri) {
  config.validate();
  tri.validate();
  if (!data.support_hint)
    throw std::invalid_argument("shift_stability_study: initial data needs a support hint");
  if (n0 == 0) throw std::invalid_argument("shift_stability_study: zero shift");

  std::vector<ShiftStabilityEntry> out;
  const double h0 = config.h_list.front();
  for (double h : config.h_list) {
    const double fac_real = h0 / h;
    const long fac = static_cast<long>(std::round(fac_real));
    if (std::abs(fac_real - static_cast<double>(fac)) > 1e-9)
      throw std::invalid_argument("shift_stability_study: refinement factors must be integers");

    ShiftStabilityEntry entry;
    entry.h = h;
    entry.n0 = n0 * fac;
    entry.tri = TriangleDomain{tri.n1 * fac, tri.k1 * fac, tri.k0 * fac};
    const long k_top = entry.tri.k1;
    if (k_top > config.steps_for(h))
      throw std::invalid_argument("shift_stability_study: triangle extends past T");

    const Grid base = detail::base_window(data.support_hint->first, data.support_hint->second, h,
                                          config.window_pad);
    SpinorField f0 = sample_initial(data, base, config.sampling);
    std::vector<SpinorField> primary = evolve_trajectory(f0, config.params, k_top);
    std::vector<SpinorField> secondary;
    secondary.reserve(primary.size());
    for (const SpinorField& f : primary) secondary.push_back(shift_field(f, entry.n0));

    SolutionPair pair{primary, secondary, {}};
    entry.trace = glimm_trace(pair, entry.tri, config.K);

    const double f1_0 = entry.trace.levels.front().F1;
    double ratio = 0.0;
    for (const auto& row : entry.trace.levels) {
      if (f1_0 == 0.0)
        ratio = std::max(ratio, row.F1 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      else
        ratio = std::max(ratio, row.F1 / f1_0);
    }
    entry.f1_ratio_max = ratio;

    const long span = entry.tri.k1 - entry.tri.k0;
    const long stride = std::max<long>(1, span / 16);
    for (long k = entry.tri.k0; k <= entry.tri.k1; k += stride) {
      const SpinorField& lv = primary[static_cast<std::size_t>(k)];
      entry.strip.emplace_back(static_cast<double>(k) * h,
                               l2_distance_pc(lv, shift_field(lv, entry.n0)));
      if (span == 0) break;
    }
    out.push_back(std::move(entry));
  }
  return out;
}

// L2 moduli of continuity along the two characteristic families between
// times t0 and t1 (both multiples of the first h in the list): returns
//   ( h * sum_n |u(t1, n) - u(t0, n - d)|^2,  h * sum_n |v(t1, n) - v(t0, n + d)|^2 )
// with d = (t1 - t0)/h the level offset. Both vanish identically for pure
// streaming; for interacting runs they contract as t1 -> t0.
inline std::pair<double, double> characteristic_modulus(const InitialData& data,
                                                        const StudyConfig& config, double t0,
                                                        double t1) {
  config.validate();
  if (!data.support_hint)
    throw std::invalid_argument("characteristic_modulus: initial data needs a support hint");
  const double h = config.h_list.front();
  const long k0 = static_cast<long>(std::round(t0 / h));
  const long k1 = static_cast<long>(std::round(t1 / h));
  if (std::abs(static_cast<double>(k0) * h - t0) > 1e-9 ||
      std::abs(static_cast<double>(k1) * h - t1) > 1e-9)
    throw std::invalid_argument("characteristic_modulus: t0 and t1 must be level times");
  if (k0 < 0 || k1 < k0) throw std::invalid_argument("characteristic_modulus: need 0 <= t0 <= t1");
  if (static_cast<double>(k1) * h > config.T + 1e-12)
    throw std::invalid_argument("characteristic_modulus: t1 exceeds T");

  const Grid base = detail::base_window(data.support_hint->first, data.support_hint->second, h,
                                        config.window_pad);
  SpinorField f = sample_initial(data, base, config.sampling);
  f = evolve(std::move(f), config.params, k0);
  SpinorField at_t0 = f;
  f = evolve(std::move(f), config.params, k1 - k0);

  const long d = k1 - k0;
  KahanSum su, sv;
  for (long n = f.grid.n_min; n <= f.grid.n_max; ++n) {
    su.add(abs2(f.u[f.index(n)] - at_t0.u_at(n - d)));
    sv.add(abs2(f.v[f.index(n)] - at_t0.v_at(n + d)));
  }
  return {h * su.value(), h * sv.value()};
}

}  // namespace qlb
