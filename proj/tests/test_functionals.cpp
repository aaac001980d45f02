#include <doctest.h>

#include <cmath>
#include <vector>

#include "qlb/functionals.hpp"

using qlb::cplx;

namespace {

qlb::SpinorField random_field(qlb::Rng& rng, double h, long lo, long hi, long k, double amp) {
  qlb::SpinorField f = qlb::SpinorField::zeros(qlb::Grid{h, lo, hi, k});
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.u[i] = rng.disk(amp);
    f.v[i] = rng.disk(amp);
  }
  return f;
}

std::vector<qlb::SpinorField> random_levels(qlb::Rng& rng, double h, long lo, long hi,
                                            long k_first, long count, double amp) {
  std::vector<qlb::SpinorField> out;
  for (long j = 0; j < count; ++j) out.push_back(random_field(rng, h, lo, hi, k_first + j, amp));
  return out;
}

// O(w^2) reference for the ordered-pair interaction row sum.
double q1_oracle(const qlb::SolutionPair& pair, const qlb::TriangleDomain& tri, long k) {
  const qlb::SpinorField& p = pair.primary_at(k);
  const qlb::SpinorField& q = pair.secondary_at(k);
  long double total = 0.0L;
  for (long n = tri.row_lo(k); n <= tri.row_hi(k); ++n) {
    for (long l = n; l <= tri.row_hi(k); ++l) {
      const long double a_n = qlb::abs2(q.u_at(n) - p.u_at(n));
      const long double b_l = qlb::abs2(q.v_at(l) - p.v_at(l));
      const long double wb_l = qlb::abs2(p.v_at(l)) + qlb::abs2(q.v_at(l));
      const long double wa_n = qlb::abs2(p.u_at(n)) + qlb::abs2(q.u_at(n));
      total += a_n * wb_l + b_l * wa_n;
    }
  }
  return static_cast<double>(total);
}

}  // namespace

TEST_CASE("triangle row geometry") {
  qlb::TriangleDomain tri{3, 5, 2};
  tri.validate();
  CHECK(tri.row_lo(5) == 3);
  CHECK(tri.row_hi(5) == 3);  // apex row is a single site
  CHECK(tri.row_lo(2) == 0);
  CHECK(tri.row_hi(2) == 6);
  CHECK_THROWS_AS((qlb::TriangleDomain{0, 2, 3}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((qlb::TriangleDomain{0, 2, -1}).validate(), std::invalid_argument);
}

TEST_CASE("row functionals against quadratic oracles") {
  qlb::Rng rng(811);
  const double h = 0.2;
  const qlb::TriangleDomain tri{1, 4, 0};
  const auto primary = random_levels(rng, h, -8, 8, 0, 5, 2.0);
  const auto secondary = random_levels(rng, h, -8, 8, 0, 5, 2.0);
  qlb::SolutionPair pair{primary, secondary, {}};
  pair.validate();

  for (long k = tri.k0; k <= tri.k1; ++k) {
    // direct double-loop references
    long double l1_ref = 0.0L, d1_ref = 0.0L;
    const qlb::SpinorField& p = pair.primary_at(k);
    const qlb::SpinorField& q = pair.secondary_at(k);
    for (long n = tri.row_lo(k); n <= tri.row_hi(k); ++n) {
      const double a = qlb::abs2(q.u_at(n) - p.u_at(n));
      const double b = qlb::abs2(q.v_at(n) - p.v_at(n));
      l1_ref += a + b;
      d1_ref += a * (qlb::abs2(p.v_at(n)) + qlb::abs2(q.v_at(n))) +
                b * (qlb::abs2(p.u_at(n)) + qlb::abs2(q.u_at(n)));
    }
    CHECK(qlb::l1(pair, tri, k) ==
          doctest::Approx(static_cast<double>(l1_ref)).epsilon(1e-13));
    CHECK(qlb::d1(pair, tri, k) ==
          doctest::Approx(static_cast<double>(d1_ref)).epsilon(1e-13));
    CHECK(qlb::q1(pair, tri, k) == doctest::Approx(q1_oracle(pair, tri, k)).epsilon(1e-13));

    // structural inequalities
    CHECK(qlb::q1(pair, tri, k) >= qlb::d1(pair, tri, k) * (1.0 - 1e-14));
    CHECK(qlb::d1(pair, tri, k) >= 0.0);
  }
}

TEST_CASE("ordered-pair sum on a two-site row by hand") {
  const double h = 0.5;
  std::vector<qlb::SpinorField> primary(1, qlb::SpinorField::zeros(qlb::Grid{h, 0, 1, 0}));
  std::vector<qlb::SpinorField> secondary = primary;
  primary[0].u = {cplx{1, 0}, cplx{0, 2}};
  primary[0].v = {cplx{0, 1}, cplx{1, 1}};
  secondary[0].u = {cplx{2, 0}, cplx{0, 0}};
  secondary[0].v = {cplx{0, -1}, cplx{1, 0}};
  qlb::SolutionPair pair{primary, secondary, {}};
  const qlb::TriangleDomain tri{1, 1, 0};  // row 0 spans sites {0, 1}

  // a = |U|^2 = {1, 4}; b = |V|^2 = {4, 1}
  // wa = |u|^2 + |u~|^2 = {5, 4}; wb = |v|^2 + |v~|^2 = {2, 3}
  // Q1 = a0 (wb0 + wb1) + a1 wb1 + b0 wa0 + b1 (wa0 + wa1)
  //    = 1*5 + 4*3 + 4*5 + 1*9 = 46
  CHECK(qlb::q1(pair, tri, 0) == doctest::Approx(46.0).epsilon(1e-15));
  // D1 = a0 wb0 + a1 wb1 + b0 wa0 + b1 wa1 = 2 + 12 + 20 + 4 = 38
  CHECK(qlb::d1(pair, tri, 0) == doctest::Approx(38.0).epsilon(1e-15));
  // L1 = 1 + 4 + 4 + 1 = 10
  CHECK(qlb::l1(pair, tri, 0) == doctest::Approx(10.0).epsilon(1e-15));
  // F1 = L1 h + K Q1 h^2 with K = 10
  CHECK(qlb::f1(pair, tri, 0, 10.0) ==
        doctest::Approx(10.0 * 0.5 + 10.0 * 46.0 * 0.25).epsilon(1e-15));
}

TEST_CASE("trace rows reuse the exact row evaluations") {
  qlb::Rng rng(823);
  const double h = 0.25;
  const qlb::TriangleDomain tri{0, 3, 1};
  const auto primary = random_levels(rng, h, -6, 6, 0, 5, 1.5);
  const auto secondary = random_levels(rng, h, -6, 6, 0, 5, 1.5);
  qlb::SolutionPair pair{primary, secondary, {}};

  const qlb::FunctionalTrace trace = qlb::glimm_trace(pair, tri, 10.0);
  REQUIRE(trace.levels.size() == 3);
  for (const qlb::FunctionalLevel& row : trace.levels) {
    CHECK(row.L1 == qlb::l1(pair, tri, row.k));
    CHECK(row.Q1 == qlb::q1(pair, tri, row.k));
    CHECK(row.D1 == qlb::d1(pair, tri, row.k));
    CHECK(row.F1 == qlb::f1(pair, tri, row.k, 10.0));
    CHECK(row.L0 == qlb::l0(pair.primary_at(row.k), tri, row.k));
    CHECK(row.Lambda == row.D0 + row.D0_tilde + row.Lg);  // no forcing: Lg = 0
    CHECK(row.Lg == 0.0);
  }
  CHECK(trace.levels[0].rho == 0.0);

  // identical trajectories: every difference functional and quotient is zero
  qlb::SolutionPair same{primary, primary, {}};
  const qlb::FunctionalTrace zero_trace = qlb::glimm_trace(same, tri, 10.0);
  for (const qlb::FunctionalLevel& row : zero_trace.levels) {
    CHECK(row.L1 == 0.0);
    CHECK(row.Q1 == 0.0);
    CHECK(row.F1 == 0.0);
    CHECK(row.rho == 0.0);
  }
}

TEST_CASE("trace validation errors") {
  qlb::Rng rng(829);
  const auto primary = random_levels(rng, 0.25, -4, 4, 2, 3, 1.0);
  const auto secondary = random_levels(rng, 0.25, -4, 4, 2, 3, 1.0);
  qlb::SolutionPair pair{primary, secondary, {}};
  CHECK_THROWS_WITH_AS(qlb::glimm_trace(pair, qlb::TriangleDomain{0, 6, 0}, 10.0),
                       doctest::Contains("do not cover"), std::invalid_argument);
  CHECK_THROWS_AS(qlb::glimm_trace(pair, qlb::TriangleDomain{0, 3, 2}, 0.0),
                  std::invalid_argument);

  const auto shorter = random_levels(rng, 0.25, -4, 4, 2, 2, 1.0);
  qlb::SolutionPair bad{primary, shorter, {}};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

namespace {

// Brute-force evaluation of the decay statement for one transition.
double bony_slack_oracle(const qlb::BonyInput& in, std::size_t j) {
  const auto q_of = [&](std::size_t row) {
    long double q = 0.0L;
    for (std::size_t n = 0; n < in.a[row].size(); ++n)
      for (std::size_t l = n; l < in.b[row].size(); ++l) q += (long double)in.a[row][n] * in.b[row][l];
    return q;
  };
  long double d = 0.0L, la = 0.0L, lb = 0.0L, lc = 0.0L, ld = 0.0L;
  for (std::size_t n = 0; n < in.a[j - 1].size(); ++n) {
    d += (long double)in.a[j - 1][n] * in.b[j - 1][n];
    la += in.a[j - 1][n];
    lb += in.b[j - 1][n];
    lc += in.c[j - 1][n];
    ld += in.d[j - 1][n];
  }
  const long double e = la * ld + lb * lc + lc * ld;
  return static_cast<double>(e - (q_of(j) - q_of(j - 1) + d));
}

qlb::BonyInput random_bony_input(qlb::Rng& rng, long k1_rel, long half) {
  qlb::BonyInput in;
  in.tri = qlb::TriangleDomain{0, half, half - k1_rel};
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
    in.a[j].resize(w);
    in.b[j].resize(w);
    for (long i = 0; i < w; ++i) {
      in.c[j][i] = rng.uniform(0.0, 2.0);
      in.d[j][i] = rng.uniform(0.0, 2.0);
    }
    if (j == 0) {
      for (long i = 0; i < w; ++i) {
        in.a[j][i] = rng.uniform(0.0, 2.0);
        in.b[j][i] = rng.uniform(0.0, 2.0);
      }
    } else {
      const long lo = in.tri.row_lo(k), plo = in.tri.row_lo(k - 1);
      for (long i = 0; i < w; ++i) {
        const long n = lo + i;
        in.a[j][i] = rng.uniform() * (in.a[j - 1][n - 1 - plo] + in.c[j - 1][n - 1 - plo]);
        in.b[j][i] = rng.uniform() * (in.b[j - 1][n + 1 - plo] + in.d[j - 1][n + 1 - plo]);
      }
    }
  }
  return in;
}

}  // namespace

TEST_CASE("interaction decay slacks match a brute-force oracle and stay nonnegative") {
  qlb::Rng rng(907);
  for (int inst = 0; inst < 500; ++inst) {
    const long k1_rel = rng.integer(1, 6);
    const long half = rng.integer(k1_rel, 10);
    const qlb::BonyInput in = random_bony_input(rng, k1_rel, half);
    const std::vector<qlb::BonySlack> slacks = qlb::bony_lemma_check(in);
    REQUIRE(slacks.size() == static_cast<std::size_t>(k1_rel));
    for (std::size_t j = 1; j < in.a.size(); ++j) {
      const double want = bony_slack_oracle(in, j);
      const double tol = 1e-12 * std::max(1.0, slacks[j - 1].scale);
      CHECK(std::abs(slacks[j - 1].slack - want) <= tol);
      CHECK(slacks[j - 1].slack >= -tol);
    }
  }
}

TEST_CASE("violated recurrences are rejected with a location") {
  qlb::Rng rng(911);
  qlb::BonyInput in = random_bony_input(rng, 2, 4);
  in.a[1][1] = in.a[0][0] + in.c[0][0] + 5.0;  // break the right-mover recurrence
  CHECK_THROWS_WITH_AS(qlb::bony_lemma_check(in), doctest::Contains("a-recurrence"),
                       std::invalid_argument);

  qlb::BonyInput in2 = random_bony_input(rng, 2, 4);
  in2.b[2][0] = 1e6;
  CHECK_THROWS_WITH_AS(qlb::bony_lemma_check(in2), doctest::Contains("b-recurrence"),
                       std::invalid_argument);

  qlb::BonyInput in3 = random_bony_input(rng, 2, 4);
  in3.c[0][0] = -1.0;
  CHECK_THROWS_AS(qlb::bony_lemma_check(in3), std::invalid_argument);
  qlb::BonyInput in4 = random_bony_input(rng, 2, 4);
  in4.d.pop_back();
  CHECK_THROWS_AS(qlb::bony_lemma_check(in4), std::invalid_argument);
}

TEST_CASE("triangle mass bookkeeping on real trajectories") {
  qlb::Rng rng(1009);

  SUBCASE("random interacting trajectories balance exactly") {
    for (int trial = 0; trial < 25; ++trial) {
      qlb::ModelParams p;
      p.m = rng.uniform(0.0, 2.0);
      p.alpha = rng.uniform(-1.0, 1.0);
      p.beta = rng.uniform(-1.0, 1.0);
      const double h = rng.uniform(0.05, 0.5);
      const qlb::SpinorField f0 = random_field(rng, h, -6, 6, 0, 1.0);
      const long k0 = rng.integer(0, 2);
      const long k1 = k0 + rng.integer(1, 12);
      const auto levels = qlb::evolve_trajectory(f0, p, k1 + 1);
      qlb::TriangleDomain tri{rng.integer(-3, 3), k1, k0};
      const qlb::TriangleBalanceReport rep = qlb::triangle_balance(levels, tri);
      CHECK(rep.rel_residual <= 1e-12);
      CHECK(rep.min_slack >= -1e-12 * std::max(1.0, rep.base));
      REQUIRE(rep.escape_slack.size() == static_cast<std::size_t>(k1 - k0));
      REQUIRE(rep.row_slack.size() == rep.escape_slack.size());
    }
  }

  SUBCASE("single-transition triangle reduces to per-node conservation") {
    const qlb::SpinorField f0 = random_field(rng, 0.25, -5, 5, 0, 2.0);
    const auto levels = qlb::evolve_trajectory(f0, qlb::ModelParams::thirring(1.0), 1);
    const qlb::TriangleBalanceReport rep =
        qlb::triangle_balance(levels, qlb::TriangleDomain{0, 0, 0});
    CHECK(rep.rel_residual <= 1e-14);
    CHECK(rep.escape_slack.empty());
    CHECK(rep.min_slack == 0.0);
  }

  SUBCASE("zero field gives zero base and zero slacks") {
    const qlb::SpinorField f0 = qlb::SpinorField::zeros(qlb::Grid{0.5, -4, 4, 0});
    const auto levels = qlb::evolve_trajectory(f0, qlb::ModelParams{}, 4);
    const qlb::TriangleBalanceReport rep =
        qlb::triangle_balance(levels, qlb::TriangleDomain{0, 3, 0});
    CHECK(rep.base == 0.0);
    CHECK(rep.residual == 0.0);
    CHECK(rep.rel_residual == 0.0);
    CHECK(rep.min_slack == 0.0);
  }

  SUBCASE("missing levels are rejected") {
    const qlb::SpinorField f0 = random_field(rng, 0.25, -5, 5, 0, 1.0);
    const auto levels = qlb::evolve_trajectory(f0, qlb::ModelParams{}, 3);
    CHECK_THROWS_WITH_AS(qlb::triangle_balance(levels, qlb::TriangleDomain{0, 3, 0}),
                         doctest::Contains("do not cover"), std::invalid_argument);
  }
}

TEST_CASE("pointwise propagation bound on free streaming is below one") {
  qlb::Rng rng(1103);
  const qlb::SpinorField f0 = random_field(rng, 0.2, -12, 12, 0, 3.0);
  const auto levels = qlb::evolve_trajectory(f0, qlb::ModelParams{}, 10);
  const qlb::PointwiseBoundReport rep = qlb::pointwise_bound_check(levels);
  CHECK(rep.c1 <= 1.0);
  CHECK(rep.c1 > 0.0);

  const qlb::PointwiseBoundReport again =
      qlb::pointwise_bound_check(levels, rep.c1);
  CHECK(again.ref_ratio == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(again.stable_vs_ref);
  const qlb::PointwiseBoundReport off = qlb::pointwise_bound_check(levels, rep.c1 / 3.0);
  CHECK_FALSE(off.stable_vs_ref);
}

TEST_CASE("pointwise bound constant stays order one for interacting runs") {
  qlb::Rng rng(1109);
  const qlb::SpinorField f0 = random_field(rng, 0.1, -10, 10, 0, 0.8);
  const auto levels = qlb::evolve_trajectory(f0, qlb::ModelParams::gross_neveu(1.0), 20);
  const qlb::PointwiseBoundReport rep = qlb::pointwise_bound_check(levels);
  // the first transition carries no dispersion allowance, so the constant
  // is only required to be finite and moderate, not close to one
  CHECK(rep.c1 < 100.0);
  CHECK(std::isfinite(rep.c1));
}
