#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlb/lattice.hpp"
#include "qlb/stepper.hpp"

namespace qlb {

// Backward light triangle with apex (n1, k1): row k spans
// [n1 - k1 + k, n1 + k1 - k] for k0 <= k <= k1.
struct TriangleDomain {
  long n1 = 0;
  long k1 = 0;
  long k0 = 0;

  void validate() const {
    if (k0 < 0 || k0 > k1) throw std::invalid_argument("TriangleDomain: need 0 <= k0 <= k1");
  }
  long row_lo(long k) const { return n1 - k1 + k; }
  long row_hi(long k) const { return n1 + k1 - k; }
};

// A homogeneous trajectory, a forced one, and the forcing that drives the
// latter. Spans are positional: entry i of each span belongs to the same
// level; a forcing span shorter than the trajectories is zero-extended.
struct SolutionPair {
  std::span<const SpinorField> primary;
  std::span<const SpinorField> secondary;
  std::span<const ForcingLevel> forcing = {};

  void validate() const {
    if (primary.empty() || secondary.empty())
      throw std::invalid_argument("SolutionPair: empty trajectory");
    if (primary.size() != secondary.size())
      throw std::invalid_argument("SolutionPair: trajectories have different level counts");
    for (std::size_t i = 0; i < primary.size(); ++i) {
      if (primary[i].grid.k != secondary[i].grid.k)
        throw std::invalid_argument("SolutionPair: level indices disagree");
      if (primary[i].grid.h != secondary[i].grid.h)
        throw std::invalid_argument("SolutionPair: step sizes disagree");
    }
  }

  long first_level() const { return primary.front().grid.k; }
  long last_level() const { return primary.back().grid.k; }
  double h() const { return primary.front().grid.h; }
  const SpinorField& primary_at(long k) const { return primary[level_index(k)]; }
  const SpinorField& secondary_at(long k) const { return secondary[level_index(k)]; }
  const ForcingLevel* forcing_at(long k) const {
    const std::size_t i = level_index(k);
    return i < forcing.size() ? &forcing[i] : nullptr;
  }

 private:
  std::size_t level_index(long k) const {
    if (k < first_level() || k > last_level())
      throw std::out_of_range("SolutionPair: level " + std::to_string(k) + " not stored");
    return static_cast<std::size_t>(k - first_level());
  }
};

namespace detail {

inline void require_levels(long have_lo, long have_hi, long need_lo, long need_hi,
                           const char* who) {
  if (need_lo < have_lo || need_hi > have_hi)
    throw std::invalid_argument(std::string(who) + ": stored levels [" +
                                std::to_string(have_lo) + "," + std::to_string(have_hi) +
                                "] do not cover [" + std::to_string(need_lo) + "," +
                                std::to_string(need_hi) + "]");
}

}  // namespace detail

// Row mass: sum over row k of |u|^2 + |v|^2.
inline double l0(const SpinorField& f, const TriangleDomain& tri, long k) {
  tri.validate();
  KahanSum s;
  for (long n = tri.row_lo(k); n <= tri.row_hi(k); ++n) {
    s.add(abs2(f.u_at(n)));
    s.add(abs2(f.v_at(n)));
  }
  return s.value();
}

// Row interaction density: sum over row k of |u|^2 |v|^2.
inline double d0(const SpinorField& f, const TriangleDomain& tri, long k) {
  tri.validate();
  KahanSum s;
  for (long n = tri.row_lo(k); n <= tri.row_hi(k); ++n) s.add(abs2(f.u_at(n)) * abs2(f.v_at(n)));
  return s.value();
}

// Row forcing mass: sum over row k of |g1|^2 + |g2|^2.
inline double lg(const ForcingLevel& g, const TriangleDomain& tri, long k) {
  tri.validate();
  KahanSum s;
  for (long n = tri.row_lo(k); n <= tri.row_hi(k); ++n) {
    s.add(abs2(g.g1_at(n)));
    s.add(abs2(g.g2_at(n)));
  }
  return s.value();
}

// Row mass of the difference field U = u_secondary - u_primary, likewise V.
inline double l1(const SolutionPair& pair, const TriangleDomain& tri, long k) {
  tri.validate();
  const SpinorField& p = pair.primary_at(k);
  const SpinorField& q = pair.secondary_at(k);
  KahanSum s;
  for (long n = tri.row_lo(k); n <= tri.row_hi(k); ++n) {
    s.add(abs2(q.u_at(n) - p.u_at(n)));
    s.add(abs2(q.v_at(n) - p.v_at(n)));
  }
  return s.value();
}

// Ordered-pair interaction functional over row k:
//   sum_{n <= l} |U_n|^2 (|v_l|^2 + |v~_l|^2) + |V_l|^2 (|u_n|^2 + |u~_n|^2),
// computed with prefix/suffix sums in linear time.
inline double q1(const SolutionPair& pair, const TriangleDomain& tri, long k) {
  tri.validate();
  const SpinorField& p = pair.primary_at(k);
  const SpinorField& q = pair.secondary_at(k);
  const long lo = tri.row_lo(k), hi = tri.row_hi(k);
  const std::size_t w = static_cast<std::size_t>(hi - lo + 1);

  std::vector<double> a(w), b(w), wa(w), wb(w);
  for (long n = lo; n <= hi; ++n) {
    const std::size_t i = static_cast<std::size_t>(n - lo);
    a[i] = abs2(q.u_at(n) - p.u_at(n));
    b[i] = abs2(q.v_at(n) - p.v_at(n));
    wa[i] = abs2(p.u_at(n)) + abs2(q.u_at(n));
    wb[i] = abs2(p.v_at(n)) + abs2(q.v_at(n));
  }
  // suffix of wb, prefix of wa
  KahanSum total;
  {
    KahanSum suf;
    for (std::size_t i = w; i-- > 0;) {
      suf.add(wb[i]);
      total.add(a[i] * suf.value());
    }
    KahanSum pre;
    for (std::size_t i = 0; i < w; ++i) {
      pre.add(wa[i]);
      total.add(b[i] * pre.value());
    }
  }
  return total.value();
}

// Diagonal part of q1 (n = l only).
inline double d1(const SolutionPair& pair, const TriangleDomain& tri, long k) {
  tri.validate();
  const SpinorField& p = pair.primary_at(k);
  const SpinorField& q = pair.secondary_at(k);
  KahanSum s;
  for (long n = tri.row_lo(k); n <= tri.row_hi(k); ++n) {
    const double a = abs2(q.u_at(n) - p.u_at(n));
    const double b = abs2(q.v_at(n) - p.v_at(n));
    s.add(a * (abs2(p.v_at(n)) + abs2(q.v_at(n))));
    s.add(b * (abs2(p.u_at(n)) + abs2(q.u_at(n))));
  }
  return s.value();
}

// The weighted combination every growth statement is made about. Defined
// once so trace rows and direct evaluations are bit-identical.
inline double f1_value(double l1_val, double q1_val, double h, double K) {
  return l1_val * h + K * q1_val * h * h;
}

inline double f1(const SolutionPair& pair, const TriangleDomain& tri, long k, double K) {
  return f1_value(l1(pair, tri, k), q1(pair, tri, k), pair.h(), K);
}

struct FunctionalLevel {
  long k = 0;
  double L0 = 0, L0_tilde = 0, Lg = 0;
  double D0 = 0, D0_tilde = 0;
  double L1 = 0, Q1 = 0, D1 = 0, F1 = 0;
  double Lambda = 0;
  double rho = 0;
};

struct FunctionalTrace {
  double h = 0;
  double K = 0;
  std::vector<FunctionalLevel> levels;
};

// Full per-level trace of the stability functionals over the triangle.
// rho is the per-level growth quotient
//   (F1(k) - F1(k-1)) / (h^2 (Lg + L1)(k-1) + h^3 Lambda(k-1) L1(k-1)),
// with 0/0 read as 0; it stays order-one exactly when the growth bound
// holds with an order-one constant.
inline FunctionalTrace glimm_trace(const SolutionPair& pair, const TriangleDomain& tri, double K) {
  tri.validate();
  pair.validate();
  if (!(K > 0.0) || !std::isfinite(K)) throw std::invalid_argument("glimm_trace: K must be positive");
  detail::require_levels(pair.first_level(), pair.last_level(), tri.k0, tri.k1, "glimm_trace");

  FunctionalTrace trace;
  trace.h = pair.h();
  trace.K = K;
  trace.levels.reserve(static_cast<std::size_t>(tri.k1 - tri.k0 + 1));
  for (long k = tri.k0; k <= tri.k1; ++k) {
    FunctionalLevel row;
    row.k = k;
    row.L0 = l0(pair.primary_at(k), tri, k);
    row.L0_tilde = l0(pair.secondary_at(k), tri, k);
    const ForcingLevel* g = pair.forcing_at(k);
    row.Lg = g ? lg(*g, tri, k) : 0.0;
    row.D0 = d0(pair.primary_at(k), tri, k);
    row.D0_tilde = d0(pair.secondary_at(k), tri, k);
    row.L1 = l1(pair, tri, k);
    row.Q1 = q1(pair, tri, k);
    row.D1 = d1(pair, tri, k);
    row.F1 = f1_value(row.L1, row.Q1, trace.h, K);
    row.Lambda = row.D0 + row.D0_tilde + row.Lg;
    if (trace.levels.empty()) {
      row.rho = 0.0;
    } else {
      const FunctionalLevel& prev = trace.levels.back();
      const double num = row.F1 - prev.F1;
      const double den =
          trace.h * trace.h * (prev.Lg + prev.L1) + trace.h * trace.h * trace.h * prev.Lambda * prev.L1;
      if (den == 0.0)
        row.rho = (num == 0.0) ? 0.0
                               : std::copysign(std::numeric_limits<double>::infinity(), num);
      else
        row.rho = num / den;
    }
    trace.levels.push_back(row);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Interaction-functional decay check on abstract nonnegative row data.
// Admissible inputs satisfy, on every interior row,
//   a^k_n <= a^{k-1}_{n-1} + c^{k-1}_{n-1}   (right-moving part)
//   b^k_l <= b^{k-1}_{l+1} + d^{k-1}_{l+1}   (left-moving part)
// and the check certifies, per level transition,
//   Q(k) - Q(k-1) + D(k-1) <= E(k-1),
//   E = L^a L^d + L^b L^c + L^c L^d
// with Q the ordered-pair sum of a against b and D its diagonal.

struct BonyInput {
  TriangleDomain tri;
  // row j holds level tri.k0 + j, sized to the row width
  std::vector<std::vector<double>> a, b, c, d;
};

struct BonySlack {
  long k = 0;       // transition into level k
  double slack = 0; // E(k-1) - (Q(k) - Q(k-1) + D(k-1)); the lemma says >= 0
  double scale = 0; // max of the compared magnitudes, for relative tolerances
};

namespace detail {

inline double bony_row_q(const std::vector<double>& a, const std::vector<double>& b) {
  KahanSum total, suf;
  for (std::size_t i = a.size(); i-- > 0;) {
    suf.add(b[i]);
    total.add(a[i] * suf.value());
  }
  return total.value();
}

inline double bony_row_dot(const std::vector<double>& a, const std::vector<double>& b) {
  KahanSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s.add(a[i] * b[i]);
  return s.value();
}

inline double bony_row_sum(const std::vector<double>& a) {
  KahanSum s;
  for (double x : a) s.add(x);
  return s.value();
}

}  // namespace detail

inline std::vector<BonySlack> bony_lemma_check(const BonyInput& in) {
  in.tri.validate();
  const std::size_t rows = static_cast<std::size_t>(in.tri.k1 - in.tri.k0 + 1);
  const auto check_shape = [&](const std::vector<std::vector<double>>& f, const char* name) {
    if (f.size() != rows)
      throw std::invalid_argument(std::string("bony_lemma_check: ") + name + " has " +
                                  std::to_string(f.size()) + " rows, triangle has " +
                                  std::to_string(rows));
    for (std::size_t j = 0; j < rows; ++j) {
      const long k = in.tri.k0 + static_cast<long>(j);
      const std::size_t w = static_cast<std::size_t>(in.tri.row_hi(k) - in.tri.row_lo(k) + 1);
      if (f[j].size() != w)
        throw std::invalid_argument(std::string("bony_lemma_check: ") + name + " row " +
                                    std::to_string(k) + " has wrong width");
      for (double x : f[j])
        if (!(x >= 0.0) || !std::isfinite(x))
          throw std::invalid_argument(std::string("bony_lemma_check: ") + name + " row " +
                                      std::to_string(k) + " has a negative or nonfinite entry");
    }
  };
  check_shape(in.a, "a");
  check_shape(in.b, "b");
  check_shape(in.c, "c");
  check_shape(in.d, "d");

  // recurrence preconditions, with rounding-level slack
  for (std::size_t j = 1; j < rows; ++j) {
    const long k = in.tri.k0 + static_cast<long>(j);
    const long lo = in.tri.row_lo(k), hi = in.tri.row_hi(k);
    const long plo = in.tri.row_lo(k - 1);
    for (long n = lo; n <= hi; ++n) {
      const std::size_t i = static_cast<std::size_t>(n - lo);
      const double rhs_a = in.a[j - 1][static_cast<std::size_t>(n - 1 - plo)] +
                           in.c[j - 1][static_cast<std::size_t>(n - 1 - plo)];
      if (in.a[j][i] - rhs_a > 1e-12 * std::max(1.0, std::max(in.a[j][i], rhs_a)))
        throw std::invalid_argument("bony_lemma_check: a-recurrence violated at (n=" +
                                    std::to_string(n) + ", k=" + std::to_string(k) + ")");
      const double rhs_b = in.b[j - 1][static_cast<std::size_t>(n + 1 - plo)] +
                           in.d[j - 1][static_cast<std::size_t>(n + 1 - plo)];
      if (in.b[j][i] - rhs_b > 1e-12 * std::max(1.0, std::max(in.b[j][i], rhs_b)))
        throw std::invalid_argument("bony_lemma_check: b-recurrence violated at (n=" +
                                    std::to_string(n) + ", k=" + std::to_string(k) + ")");
    }
  }

  std::vector<BonySlack> out;
  out.reserve(rows > 0 ? rows - 1 : 0);
  double q_prev = detail::bony_row_q(in.a[0], in.b[0]);
  for (std::size_t j = 1; j < rows; ++j) {
    const double q_cur = detail::bony_row_q(in.a[j], in.b[j]);
    const double d_prev = detail::bony_row_dot(in.a[j - 1], in.b[j - 1]);
    const double la = detail::bony_row_sum(in.a[j - 1]);
    const double lb = detail::bony_row_sum(in.b[j - 1]);
    const double lc = detail::bony_row_sum(in.c[j - 1]);
    const double ld = detail::bony_row_sum(in.d[j - 1]);
    const double e_prev = la * ld + lb * lc + lc * ld;
    BonySlack s;
    s.k = in.tri.k0 + static_cast<long>(j);
    s.slack = e_prev - (q_cur - q_prev + d_prev);
    s.scale = std::max({1e-300, q_cur, q_prev, d_prev, e_prev});
    out.push_back(s);
    q_prev = q_cur;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Exact mass bookkeeping over a triangle: everything that enters the base
// row either reaches the apex output or leaves through the slanted sides.

struct TriangleBalanceReport {
  double base = 0;      // row-k0 mass
  double outgoing = 0;  // mass of outputs not consumed inside the triangle
  double residual = 0;  // |outgoing - base|
  double rel_residual = 0;
  // per k in [k0+1, k1]: base minus the cumulative side-escape sum, and
  // base minus the full shifted-row mass at level k+1; both nonnegative
  // up to rounding
  std::vector<double> escape_slack;
  std::vector<double> row_slack;
  double min_slack = 0;
};

inline TriangleBalanceReport triangle_balance(std::span<const SpinorField> levels,
                                              const TriangleDomain& tri) {
  tri.validate();
  if (levels.empty()) throw std::invalid_argument("triangle_balance: empty trajectory");
  const long fl = levels.front().grid.k;
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i].grid.k != fl + static_cast<long>(i))
      throw std::invalid_argument("triangle_balance: levels are not consecutive");
  detail::require_levels(fl, levels.back().grid.k, tri.k0, tri.k1 + 1, "triangle_balance");
  const auto at = [&](long k) -> const SpinorField& {
    return levels[static_cast<std::size_t>(k - fl)];
  };

  TriangleBalanceReport rep;
  {
    KahanSum s;
    const SpinorField& f = at(tri.k0);
    for (long n = tri.row_lo(tri.k0); n <= tri.row_hi(tri.k0); ++n) {
      s.add(abs2(f.u_at(n)));
      s.add(abs2(f.v_at(n)));
    }
    rep.base = s.value();
  }

  KahanSum outgoing;
  KahanSum escape;
  const double tiny = 1e-300;
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (long j = tri.k0; j <= tri.k1; ++j) {
    const SpinorField& next = at(j + 1);
    for (long n = tri.row_lo(j); n <= tri.row_hi(j); ++n) {
      const bool u_matched = j < tri.k1 && (n + 1) <= tri.row_hi(j + 1);
      const bool v_matched = j < tri.k1 && (n - 1) >= tri.row_lo(j + 1);
      if (!u_matched) outgoing.add(abs2(next.u_at(n + 1)));
      if (!v_matched) outgoing.add(abs2(next.v_at(n - 1)));
    }
    // outermost pair that leaves through the sides at this transition
    escape.add(abs2(next.u_at(tri.row_hi(j) + 1)));
    escape.add(abs2(next.v_at(tri.row_lo(j) - 1)));
    // per-level statements are made for k in [k0+1, k1]
    if (j >= tri.k0 + 1) {
      rep.escape_slack.push_back(rep.base - escape.value());
      KahanSum row;
      for (long l = tri.row_lo(j) + 1; l <= tri.row_hi(j) + 1; ++l) row.add(abs2(next.u_at(l)));
      for (long l = tri.row_lo(j) - 1; l <= tri.row_hi(j) - 1; ++l) row.add(abs2(next.v_at(l)));
      rep.row_slack.push_back(rep.base - row.value());
      rep.min_slack = std::min({rep.min_slack, rep.escape_slack.back(), rep.row_slack.back()});
    }
  }
  rep.outgoing = outgoing.value();
  rep.residual = std::abs(rep.outgoing - rep.base);
  rep.rel_residual = rep.residual / std::max(rep.base, tiny);
  if (rep.escape_slack.empty()) rep.min_slack = 0.0;
  return rep;
}

// ---------------------------------------------------------------------------
// Pointwise propagation bound: every output modulus is controlled by the
// datum on its own incoming characteristic plus a sqrt(k h) dispersion
// allowance. Reports the smallest constant that makes the bound hold on
// the given trajectory.

struct PointwiseBoundReport {
  double c1 = 0.0;
  long argmax_n = 0;  // output site of the extremal ratio
  long argmax_k = 0;  // output level (steps from the first stored level)
  bool argmax_is_u = true;
  double ref_ratio = std::numeric_limits<double>::quiet_NaN();
  bool stable_vs_ref = true;
};

inline PointwiseBoundReport pointwise_bound_check(std::span<const SpinorField> levels,
                                                  std::optional<double> c1_reference = {}) {
  if (levels.size() < 2) throw std::invalid_argument("pointwise_bound_check: need at least two levels");
  const long fl = levels.front().grid.k;
  for (std::size_t i = 0; i < levels.size(); ++i)
    if (levels[i].grid.k != fl + static_cast<long>(i))
      throw std::invalid_argument("pointwise_bound_check: levels are not consecutive");
  const SpinorField& f0 = levels.front();
  const double h = f0.grid.h;
  const double eps = std::numeric_limits<double>::epsilon();

  PointwiseBoundReport rep;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    const long k = static_cast<long>(i) - 1;  // steps before this transition
    const double allowance = std::sqrt(static_cast<double>(k) * h);
    const SpinorField& lv = levels[i];
    for (long m = lv.grid.n_min; m <= lv.grid.n_max; ++m) {
      const double ru = std::abs(lv.u[lv.index(m)]) /
                        (std::abs(f0.u_at(m - 1 - k)) + allowance + eps);
      if (ru > rep.c1) {
        rep.c1 = ru;
        rep.argmax_n = m;
        rep.argmax_k = static_cast<long>(i);
        rep.argmax_is_u = true;
      }
      const double rv = std::abs(lv.v[lv.index(m)]) /
                        (std::abs(f0.v_at(m + 1 + k)) + allowance + eps);
      if (rv > rep.c1) {
        rep.c1 = rv;
        rep.argmax_n = m;
        rep.argmax_k = static_cast<long>(i);
        rep.argmax_is_u = false;
      }
    }
  }
  if (c1_reference) {
    rep.ref_ratio = rep.c1 / *c1_reference;
    rep.stable_vs_ref = rep.ref_ratio <= 2.0 && rep.ref_ratio >= 0.5;
  }
  return rep;
}

}  // namespace qlb
