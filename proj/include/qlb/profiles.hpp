#pragma once

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "qlb/harness.hpp"
#include "qlb/lattice.hpp"

namespace qlb {

// ---------------------------------------------------------------------------
// Initial data profiles

// Indicator of [lo, hi) with constant component values.
inline InitialData make_box_data(double lo, double hi, cplx value_u, cplx value_v) {
  if (!(lo < hi)) throw std::invalid_argument("make_box_data: need lo < hi");
  InitialData d;
  d.u0 = [=](double x) { return (x >= lo && x < hi) ? value_u : cplx{0.0, 0.0}; };
  d.v0 = [=](double x) { return (x >= lo && x < hi) ? value_v : cplx{0.0, 0.0}; };
  d.support_hint = {{lo, hi}};
  return d;
}

// amp * exp(-((x - center)/sigma)^2) per component.
inline InitialData make_gaussian_data(cplx amp_u, cplx amp_v, double center = 0.0,
                                      double sigma = 1.0) {
  if (!(sigma > 0.0)) throw std::invalid_argument("make_gaussian_data: sigma must be positive");
  InitialData d;
  d.u0 = [=](double x) {
    const double xi = (x - center) / sigma;
    return amp_u * std::exp(-xi * xi);
  };
  d.v0 = [=](double x) {
    const double xi = (x - center) / sigma;
    return amp_v * std::exp(-xi * xi);
  };
  // exp(-xi^2) < 1e-17 for |xi| > 6.3
  d.support_hint = {{center - 6.5 * sigma, center + 6.5 * sigma}};
  return d;
}

// Localized two-component bump with opposite parities, a convenient seed
// for strongly interacting runs: u = amp*sech(x/w), v = i*amp*sech(x/w)*tanh(x/w).
inline InitialData make_bump_data(double amp = 1.0, double w = 1.0) {
  if (!(w > 0.0)) throw std::invalid_argument("make_bump_data: width must be positive");
  InitialData d;
  d.u0 = [=](double x) { return cplx{amp / std::cosh(x / w), 0.0}; };
  d.v0 = [=](double x) {
    const double s = 1.0 / std::cosh(x / w);
    return cplx{0.0, amp * s * std::tanh(x / w)};
  };
  // sech decays like 2 e^{-|x|/w}; below 1e-17 for |x|/w > 39
  d.support_hint = {{-40.0 * w, 40.0 * w}};
  return d;
}

// Piecewise-constant segments [lo, hi) -> value; later segments override
// earlier ones where they overlap.
struct PiecewiseSegment {
  double lo = 0.0, hi = 0.0;
  cplx value;
};

inline InitialData make_piecewise_data(std::vector<PiecewiseSegment> seg_u,
                                       std::vector<PiecewiseSegment> seg_v) {
  if (seg_u.empty() && seg_v.empty())
    throw std::invalid_argument("make_piecewise_data: no segments");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto* segs : {&seg_u, &seg_v})
    for (const auto& s : *segs) {
      if (!(s.lo < s.hi)) throw std::invalid_argument("make_piecewise_data: need lo < hi");
      lo = std::min(lo, s.lo);
      hi = std::max(hi, s.hi);
    }
  const auto eval = [](const std::vector<PiecewiseSegment>& segs, double x) {
    cplx val{0.0, 0.0};
    for (const auto& s : segs)
      if (x >= s.lo && x < s.hi) val = s.value;
    return val;
  };
  InitialData d;
  d.u0 = [seg_u = std::move(seg_u), eval](double x) { return eval(seg_u, x); };
  d.v0 = [seg_v = std::move(seg_v), eval](double x) { return eval(seg_v, x); };
  d.support_hint = {{lo, hi}};
  return d;
}

inline InitialData make_zero_data() {
  InitialData d;
  d.u0 = [](double) { return cplx{0.0, 0.0}; };
  d.v0 = [](double) { return cplx{0.0, 0.0}; };
  d.support_hint = {{-1.0, 1.0}};
  return d;
}

// ---------------------------------------------------------------------------
// Smooth space-time pairs

// Plane wave under a smooth quartic-exponential window. With couplings
// (m, 0, 0) and omega = sqrt(kappa^2 + m^2), B = A (kappa - omega)/m the
// unwindowed wave solves the linear system exactly, so the source reduces
// to the window-derivative terms.
inline SmoothPair make_plane_wave_pair(double m = 1.0, double amp = 0.75, double kappa = 1.0,
                                       double window_width = 3.0) {
  if (!(m > 0.0)) throw std::invalid_argument("make_plane_wave_pair: mass must be positive");
  if (!(window_width > 0.0))
    throw std::invalid_argument("make_plane_wave_pair: window width must be positive");
  const double omega = std::sqrt(kappa * kappa + m * m);
  const double a = amp;
  const double b = amp * (kappa - omega) / m;
  const double w0 = window_width;

  const auto window = [w0](double x) {
    const double r = x / w0;
    return std::exp(-(r * r) * (r * r));
  };
  const auto dwindow = [w0, window](double x) {
    const double r = x / w0;
    return -4.0 * r * r * r / w0 * window(x);
  };
  const auto phase = [kappa, omega](double x, double t) {
    return std::polar(1.0, kappa * x - omega * t);
  };

  SmoothPair pair;
  pair.descriptor = "plane-wave";
  pair.u = [=](double x, double t) { return a * window(x) * phase(x, t); };
  pair.v = [=](double x, double t) { return b * window(x) * phase(x, t); };
  pair.du_adv = [=](double x, double t) {
    return (a * dwindow(x) + cplx{0.0, kappa - omega} * (a * window(x))) * phase(x, t);
  };
  pair.dv_adv = [=](double x, double t) {
    return (-b * dwindow(x) - cplx{0.0, kappa + omega} * (b * window(x))) * phase(x, t);
  };
  // window < 1.5e-20 for |x| > 2.6 * w0
  pair.support_lo = -2.7 * w0;
  pair.support_hi = 2.7 * w0;
  return pair;
}

// Two counter-moving modulated Gaussians; not a solution of anything, the
// generic manufactured reference.
inline SmoothPair make_crossing_gaussians_pair() {
  struct Component {
    double a, x0, c, sigma, kappa, omega;
  };
  // u moves right at speed 0.4, v moves left at speed 0.3
  const Component cu{0.8, -0.5, 0.4, 1.0, 0.9, -0.6};
  const Component cv{0.65, 0.5, -0.3, 1.2, -0.8, 0.5};

  const auto val = [](const Component& c, double x, double t) {
    const double xi = (x - c.x0 - c.c * t) / c.sigma;
    return c.a * std::exp(-xi * xi) * std::polar(1.0, c.kappa * x + c.omega * t);
  };
  // (d_t + s d_x) of val with s = +1 for u, s = -1 for v
  const auto adv = [val](const Component& c, double s, double x, double t) {
    const double xi = (x - c.x0 - c.c * t) / c.sigma;
    const cplx factor =
        cplx{-2.0 * xi * (s - c.c) / c.sigma, c.omega + s * c.kappa};
    return factor * val(c, x, t);
  };

  SmoothPair pair;
  pair.descriptor = "crossing-gaussians";
  pair.u = [=](double x, double t) { return val(cu, x, t); };
  pair.v = [=](double x, double t) { return val(cv, x, t); };
  pair.du_adv = [=](double x, double t) { return adv(cu, +1.0, x, t); };
  pair.dv_adv = [=](double x, double t) { return adv(cv, -1.0, x, t); };
  pair.support_lo = -9.0;
  pair.support_hi = 9.0;
  return pair;
}

// Odd and even polynomial-modulated Gaussian envelopes with independent
// phases; exercises sign changes and zero crossings in both components.
inline SmoothPair make_modulated_bumps_pair() {
  // u = a (xi e^{-xi^2}) e^{i k1 x},      xi = (x - b t)/s1
  // v = c ((1-2 eta^2) e^{-eta^2}) e^{i(-k2 x + w2 t)}, eta = (x + e t)/s2
  const double a = 0.9, b = 0.25, s1 = 0.8, k1 = 0.7;
  const double c = 0.6, e = 0.35, s2 = 1.1, k2 = 0.5, w2 = 0.45;

  const auto f = [](double xi) { return xi * std::exp(-xi * xi); };
  const auto df = [](double xi) { return (1.0 - 2.0 * xi * xi) * std::exp(-xi * xi); };
  const auto g = [](double eta) { return (1.0 - 2.0 * eta * eta) * std::exp(-eta * eta); };
  const auto dg = [](double eta) { return (4.0 * eta * eta * eta - 6.0 * eta) * std::exp(-eta * eta); };

  SmoothPair pair;
  pair.descriptor = "modulated-bumps";
  pair.u = [=](double x, double t) {
    const double xi = (x - b * t) / s1;
    return a * f(xi) * std::polar(1.0, k1 * x);
  };
  pair.v = [=](double x, double t) {
    const double eta = (x + e * t) / s2;
    return c * g(eta) * std::polar(1.0, -k2 * x + w2 * t);
  };
  pair.du_adv = [=](double x, double t) {
    const double xi = (x - b * t) / s1;
    const cplx ph = std::polar(1.0, k1 * x);
    return a * (df(xi) * (1.0 - b) / s1 * ph + f(xi) * cplx{0.0, k1} * ph);
  };
  pair.dv_adv = [=](double x, double t) {
    const double eta = (x + e * t) / s2;
    const cplx ph = std::polar(1.0, -k2 * x + w2 * t);
    return c * (dg(eta) * (e - 1.0) / s2 * ph + g(eta) * cplx{0.0, w2 + k2} * ph);
  };
  pair.support_lo = -9.0;
  pair.support_hi = 9.0;
  return pair;
}

// Pure streaming reference: independent right- and left-movers; with zero
// couplings the point-sampled residual vanishes identically.
inline SmoothPair make_streaming_pair() {
  const auto hump = [](double y) { return std::exp(-y * y); };
  SmoothPair pair;
  pair.descriptor = "streaming";
  pair.u = [=](double x, double t) { return cplx{0.7 * hump(x - t), 0.2 * hump(x - t)}; };
  pair.v = [=](double x, double t) { return cplx{0.1 * hump(x + t), -0.5 * hump(x + t)}; };
  pair.du_adv = [](double, double) { return cplx{0.0, 0.0}; };
  pair.dv_adv = [](double, double) { return cplx{0.0, 0.0}; };
  pair.support_lo = -7.0;
  pair.support_hi = 7.0;
  return pair;
}

inline SmoothPair smooth_pair_by_name(const std::string& name) {
  if (name == "plane-wave") return make_plane_wave_pair();
  if (name == "crossing-gaussians") return make_crossing_gaussians_pair();
  if (name == "modulated-bumps") return make_modulated_bumps_pair();
  if (name == "streaming") return make_streaming_pair();
  throw std::invalid_argument("unknown smooth pair '" + name +
                              "' (known: plane-wave, crossing-gaussians, modulated-bumps, streaming)");
}

}  // namespace qlb
