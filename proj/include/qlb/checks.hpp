#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qlb/functionals.hpp"
#include "qlb/harness.hpp"
#include "qlb/numerics.hpp"
#include "qlb/profiles.hpp"
#include "qlb/stepper.hpp"

namespace qlb {

struct CheckConfig {
  std::uint64_t seed = 1;
  long ensemble = 200000;
  long bony_instances = 1000;
  long triangle_trials = 100;
  long gauge_samples = 100000;
  long streaming_steps = 1000;
  long roundtrip_steps = 100;
};

struct PropertyResult {
  std::string name;
  bool pass = false;
  double worst = 0.0;   // worst observed violation measure
  double bound = 0.0;   // what it had to stay below (or above, per name)
  std::string detail;   // serialized first failing case, empty when passing
};

namespace detail {

inline std::string describe_node(std::uint64_t seed, long index, const ModelParams& p, double h,
                                 cplx u, cplx v) {
  std::ostringstream os;
  os << "seed=" << seed << " index=" << index << " m=" << format_double(p.m)
     << " alpha=" << format_double(p.alpha) << " beta=" << format_double(p.beta)
     << " h=" << format_double(h) << " u=(" << format_double(u.real()) << ","
     << format_double(u.imag()) << ") v=(" << format_double(v.real()) << ","
     << format_double(v.imag()) << ")";
  return os.str();
}

// Amplitude ensemble mixing order-one, large, and very small magnitudes so
// the conservation identity is exercised across scales.
inline cplx random_amplitude(Rng& rng, double max_mag) {
  const double pick = rng.uniform();
  if (pick < 0.5) return rng.disk(std::min(max_mag, 3.0));
  if (pick < 0.8) return rng.disk(max_mag);
  const double mag = std::pow(10.0, rng.uniform(-12.0, 0.0));
  return rng.disk(mag);
}

inline ModelParams random_params(Rng& rng) {
  ModelParams p;
  p.m = rng.uniform(0.0, 10.0);
  p.alpha = rng.uniform(-10.0, 10.0);
  p.beta = rng.uniform(-10.0, 10.0);
  return p;
}

inline SpinorField random_compact_field(Rng& rng, double h, long n_lo, long n_hi, double max_mag) {
  Grid g{h, n_lo, n_hi, 0};
  SpinorField f = SpinorField::zeros(g);
  for (std::size_t i = 0; i < f.grid.size(); ++i) {
    f.u[i] = rng.disk(max_mag);
    f.v[i] = rng.disk(max_mag);
  }
  return f;
}

}  // namespace detail

// Per-node charge conservation and the determinant lower bound, checked on
// one shared random ensemble of node solves.
inline std::vector<PropertyResult> check_node_conservation(const CheckConfig& cc) {
  PropertyResult cons{"node-conservation", true, 0.0, 1e-13, ""};
  PropertyResult det{"determinant-bound", true, 0.0, 1e-12, ""};
  Rng rng(cc.seed);
  for (long i = 0; i < cc.ensemble; ++i) {
    const ModelParams p = detail::random_params(rng);
    const double h = rng.uniform(1e-6, 1.0);
    const cplx u = detail::random_amplitude(rng, 1e3);
    const cplx v = detail::random_amplitude(rng, 1e3);

    const NodeSystem sys = build_node_system(u, v, p, h);
    const double det_deficit = std::max(0.0, 1.0 - abs2(sys.det));
    if (det_deficit > det.worst) {
      det.worst = det_deficit;
      if (det_deficit > det.bound && det.detail.empty())
        det.detail = detail::describe_node(cc.seed, i, p, h, u, v);
    }

    const auto [uh, vh] = solve_node(sys);
    const double before = abs2(u) + abs2(v);
    const double after = abs2(uh) + abs2(vh);
    const double rel = std::abs(after - before) / std::max(1e-300, before);
    if (rel > cons.worst) {
      cons.worst = rel;
      if (rel > cons.bound && cons.detail.empty())
        cons.detail = detail::describe_node(cc.seed, i, p, h, u, v);
    }
  }
  cons.pass = cons.worst <= cons.bound;
  det.pass = det.worst <= det.bound;
  return {cons, det};
}

// Free streaming (m = alpha = beta = 0) must transport bits, not values.
inline PropertyResult check_streaming_exact(const CheckConfig& cc) {
  PropertyResult r{"streaming-exact", true, 0.0, 0.0, ""};
  Rng rng(cc.seed + 0x5741);
  const double h = 0.125;
  const SpinorField f0 = detail::random_compact_field(rng, h, -32, 32, 5.0);
  const ModelParams p{0.0, 0.0, 0.0};
  const SpinorField fT = evolve(f0, p, cc.streaming_steps);

  long mismatches = 0;
  const long k = cc.streaming_steps;
  for (long n = fT.grid.n_min; n <= fT.grid.n_max; ++n) {
    const cplx want_u = f0.u_at(n - k);
    const cplx want_v = f0.v_at(n + k);
    const std::size_t i = fT.index(n);
    if (!(fT.u[i] == want_u) || !(fT.v[i] == want_v)) ++mismatches;
  }
  r.worst = static_cast<double>(mismatches);
  r.pass = mismatches == 0;
  if (!r.pass) {
    std::ostringstream os;
    os << "seed=" << cc.seed + 0x5741 << " steps=" << k << " mismatched sites=" << mismatches;
    r.detail = os.str();
  }
  return r;
}

// Forced steps must satisfy the discrete charge identity: the charge gain
// equals h times the real part of the forcing cross terms.
inline PropertyResult check_forced_identity(const CheckConfig& cc) {
  PropertyResult r{"forced-charge-identity", true, 0.0, 1e-11, ""};
  Rng rng(cc.seed + 0x464f);
  const long trials = std::max<long>(1, cc.ensemble / 1000);
  for (long t = 0; t < trials; ++t) {
    ModelParams p;
    p.m = rng.uniform(0.0, 2.0);
    p.alpha = rng.uniform(-1.0, 1.0);
    p.beta = rng.uniform(-1.0, 1.0);
    const double h = rng.uniform(1e-3, 0.9);
    SpinorField f = detail::random_compact_field(rng, h, -32, 31, 3.0);
    ForcingLevel g = ForcingLevel::zeros(f.grid.n_min, f.grid.n_max);
    for (std::size_t i = 0; i < g.size(); ++i) {
      g.g1[i] = rng.disk(2.0);
      g.g2[i] = rng.disk(2.0);
    }
    const StepReport rep = step_forced(f, g, p).second;
    const double rel =
        rep.forced_charge_identity_residual / std::max(1.0, rep.charge_before / h);
    if (rel > r.worst) {
      r.worst = rel;
      if (rel > r.bound && r.detail.empty()) {
        std::ostringstream os;
        os << "seed=" << cc.seed + 0x464f << " trial=" << t << " m=" << format_double(p.m)
           << " alpha=" << format_double(p.alpha) << " beta=" << format_double(p.beta)
           << " h=" << format_double(h);
        r.detail = os.str();
      }
    }
  }
  r.pass = r.worst <= r.bound;
  return r;
}

// A global phase rotation commutes with the node solve: both nonlinear
// couplings see only moduli and the bilinear G picks up no phase.
inline PropertyResult check_gauge_covariance(const CheckConfig& cc) {
  PropertyResult r{"gauge-covariance", true, 0.0, 1e-13, ""};
  Rng rng(cc.seed + 0x4755);
  for (long i = 0; i < cc.gauge_samples; ++i) {
    const ModelParams p = detail::random_params(rng);
    const double h = rng.uniform(1e-6, 1.0);
    const cplx u = detail::random_amplitude(rng, 10.0);
    const cplx v = detail::random_amplitude(rng, 10.0);
    const double phi = rng.uniform(0.0, 6.283185307179586);
    const cplx phase = std::polar(1.0, phi);

    const auto [uh, vh] = solve_node(build_node_system(u, v, p, h));
    const auto [ur, vr] = solve_node(build_node_system(phase * u, phase * v, p, h));
    const double scale =
        std::max({1.0, std::abs(uh), std::abs(vh)});
    const double err =
        std::max(std::abs(ur - phase * uh), std::abs(vr - phase * vh)) / scale;
    if (err > r.worst) {
      r.worst = err;
      if (err > r.bound && r.detail.empty())
        r.detail = detail::describe_node(cc.seed + 0x4755, i, p, h, u, v) +
                   " phi=" + format_double(phi);
    }
  }
  r.pass = r.worst <= r.bound;
  return r;
}

// Random admissible inputs for the interaction-potential recurrence lemma.
// theta in [0,1] keeps the preconditions exact in floating point because
// fl(theta * x) <= fl(x) for theta <= 1.
inline PropertyResult check_bony_random(const CheckConfig& cc, long levels = 32,
                                        long max_half_width = 32) {
  PropertyResult r{"bony-lemma", true, 0.0, -1e-12, ""};
  Rng rng(cc.seed + 0x424f);
  double worst_rel = 0.0;  // most negative slack / scale
  for (long inst = 0; inst < cc.bony_instances; ++inst) {
    const long k1_rel = levels - 1;
    const long half = rng.integer(k1_rel, max_half_width);
    BonyInput in;
    in.tri = TriangleDomain{0, half, half - k1_rel};
    in.tri.validate();
    const double amp = rng.uniform(0.0, 10.0);
    const long rows = k1_rel + 1;
    in.a.resize(rows);
    in.b.resize(rows);
    in.c.resize(rows);
    in.d.resize(rows);
    for (long j = 0; j < rows; ++j) {
      const long k = in.tri.k0 + j;
      const long w = in.tri.row_hi(k) - in.tri.row_lo(k) + 1;
      in.c[j].resize(w);
      in.d[j].resize(w);
      for (long i = 0; i < w; ++i) {
        in.c[j][i] = rng.uniform(0.0, amp);
        in.d[j][i] = rng.uniform(0.0, amp);
      }
      in.a[j].resize(w);
      in.b[j].resize(w);
      if (j == 0) {
        for (long i = 0; i < w; ++i) {
          in.a[j][i] = rng.uniform(0.0, amp);
          in.b[j][i] = rng.uniform(0.0, amp);
        }
      } else {
        const long lo = in.tri.row_lo(k);
        const long plo = in.tri.row_lo(k - 1);
        for (long i = 0; i < w; ++i) {
          const long n = lo + i;
          const double theta_a = rng.uniform();
          const double theta_b = rng.uniform();
          in.a[j][i] = theta_a * (in.a[j - 1][n - 1 - plo] + in.c[j - 1][n - 1 - plo]);
          in.b[j][i] = theta_b * (in.b[j - 1][n + 1 - plo] + in.d[j - 1][n + 1 - plo]);
        }
      }
    }
    const std::vector<BonySlack> slacks = bony_lemma_check(in);
    for (const BonySlack& s : slacks) {
      const double rel = s.slack / std::max(1e-300, s.scale);
      if (rel < worst_rel) {
        worst_rel = rel;
        if (rel < r.bound && r.detail.empty()) {
          std::ostringstream os;
          os << "seed=" << cc.seed + 0x424f << " instance=" << inst << " level=" << s.k
             << " slack=" << format_double(s.slack) << " scale=" << format_double(s.scale);
          r.detail = os.str();
        }
      }
    }
  }
  r.worst = worst_rel;
  r.pass = worst_rel >= r.bound;
  return r;
}

// Mass bookkeeping over random space-time triangles of real trajectories:
// the exact balance identity and the two cumulative escape inequalities.
inline PropertyResult check_triangle_balance(const CheckConfig& cc) {
  PropertyResult r{"triangle-balance", true, 0.0, 1e-11, ""};
  Rng rng(cc.seed + 0x5452);
  double worst_rel = 0.0;
  double worst_slack_rel = 0.0;
  for (long t = 0; t < cc.triangle_trials; ++t) {
    ModelParams p;
    p.m = rng.uniform(0.0, 2.0);
    p.alpha = rng.uniform(-1.0, 1.0);
    p.beta = rng.uniform(-1.0, 1.0);
    const double h = rng.uniform(0.01, 0.5);
    const long k0 = rng.integer(0, 5);
    const long dk = rng.integer(1, 50);
    const long k1 = k0 + dk;

    const SpinorField f0 = detail::random_compact_field(rng, h, -8, 8, 1.0);
    const std::vector<SpinorField> levels = evolve_trajectory(f0, p, k1 + 1);

    TriangleDomain tri{rng.integer(-4, 4), k1, k0};
    tri.validate();
    const TriangleBalanceReport rep = triangle_balance(levels, tri);

    if (rep.rel_residual > worst_rel) {
      worst_rel = rep.rel_residual;
      if (worst_rel > r.bound && r.detail.empty()) {
        std::ostringstream os;
        os << "seed=" << cc.seed + 0x5452 << " trial=" << t << " k0=" << k0 << " k1=" << k1
           << " h=" << format_double(h) << " residual=" << format_double(rep.residual);
        r.detail = os.str();
      }
    }
    const double slack_rel = -rep.min_slack / std::max(1.0, rep.base);
    if (slack_rel > worst_slack_rel) {
      worst_slack_rel = slack_rel;
      if (slack_rel > 1e-12 && r.detail.empty()) {
        std::ostringstream os;
        os << "seed=" << cc.seed + 0x5452 << " trial=" << t << " min_slack="
           << format_double(rep.min_slack) << " base=" << format_double(rep.base);
        r.detail = os.str();
      }
    }
  }
  r.worst = std::max(worst_rel, worst_slack_rel);
  r.pass = worst_rel <= r.bound && worst_slack_rel <= 1e-12;
  return r;
}

// Sampling a smooth pair, extracting its discrete residual, and re-running
// the forced scheme from the same base level must reproduce the pair.
inline PropertyResult check_forced_roundtrip(const CheckConfig& cc) {
  PropertyResult r{"forced-roundtrip", true, 0.0, 1e-12, ""};
  struct Case {
    const char* pair;
    ModelParams p;
  };
  const Case cases[] = {
      {"plane-wave", ModelParams::thirring(1.0)},
      {"crossing-gaussians", ModelParams::gross_neveu(1.0)},
      {"modulated-bumps", ModelParams{0.5, 0.3, -0.2}},
  };
  const double h = 1.0 / 64.0;
  for (const Case& c : cases) {
    const SmoothPair pair = smooth_pair_by_name(c.pair);
    const double err = residual_roundtrip_error(pair, c.p, h, cc.roundtrip_steps);
    if (err > r.worst) {
      r.worst = err;
      if (err > r.bound && r.detail.empty())
        r.detail = std::string("pair=") + c.pair + " error=" + format_double(err);
    }
  }
  r.pass = r.worst <= r.bound;
  return r;
}

inline std::vector<PropertyResult> run_property_battery(const CheckConfig& cc) {
  std::vector<PropertyResult> out = check_node_conservation(cc);
  out.push_back(check_streaming_exact(cc));
  out.push_back(check_forced_identity(cc));
  out.push_back(check_gauge_covariance(cc));
  out.push_back(check_bony_random(cc));
  out.push_back(check_triangle_balance(cc));
  out.push_back(check_forced_roundtrip(cc));
  return out;
}

}  // namespace qlb
