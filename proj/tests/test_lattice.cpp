#include <doctest.h>

#include <cmath>
#include <vector>

#include "qlb/lattice.hpp"
#include "qlb/profiles.hpp"

using qlb::cplx;

TEST_CASE("model parameter validation and presets") {
  qlb::ModelParams p{1.0, 2.0, -3.0};
  p.validate();
  CHECK_THROWS_AS((qlb::ModelParams{-0.5, 0.0, 0.0}).validate(), std::invalid_argument);
  CHECK(qlb::ModelParams::thirring(2.0).is_thirring());
  CHECK(qlb::ModelParams::gross_neveu(2.0).is_gross_neveu());
  CHECK(qlb::ModelParams::gross_neveu(2.0).beta == 0.25);
  CHECK_FALSE(p.is_thirring());
}

TEST_CASE("grid geometry") {
  qlb::Grid g{0.25, -4, 7, 3};
  g.validate();
  CHECK(g.size() == 12);
  CHECK(g.x(-4) == -1.0);
  CHECK(g.t() == 0.75);
  CHECK(g.contains(-4));
  CHECK(g.contains(7));
  CHECK_FALSE(g.contains(8));
  CHECK_THROWS_AS((qlb::Grid{0.0, 0, 1, 0}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((qlb::Grid{0.1, 2, 1, 0}).validate(), std::invalid_argument);
}

TEST_CASE("bilinear coupling is the real cross term") {
  CHECK(qlb::g_bilinear(cplx{1.0, 2.0}, cplx{3.0, -1.0}) == 2.0);
  qlb::Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const cplx u = rng.disk(5.0), v = rng.disk(5.0);
    const cplx prod = std::conj(u) * v;
    CHECK(qlb::g_bilinear(u, v) == doctest::Approx(2.0 * prod.real()).epsilon(1e-14));
  }
}

TEST_CASE("point sampling reproduces an indicator exactly") {
  const qlb::InitialData data = qlb::make_box_data(0.0, 1.0, cplx{2.0, -1.0}, cplx{0.0, 3.0});
  qlb::Grid g{0.25, -8, 8, 0};
  const qlb::SpinorField f = qlb::sample_initial(data, g);
  for (long n = -8; n <= 8; ++n) {
    const bool inside = g.x(n) >= 0.0 && g.x(n) < 1.0;
    CHECK(f.u_at(n) == (inside ? cplx{2.0, -1.0} : cplx{0.0, 0.0}));
    CHECK(f.v_at(n) == (inside ? cplx{0.0, 3.0} : cplx{0.0, 0.0}));
  }
}

TEST_CASE("cell averages converge to the analytic mean of a gaussian") {
  // mean of exp(-x^2) over [0, 0.5)
  const double exact = 0.9225620128255849;
  qlb::InitialData data;
  data.u0 = [](double x) { return cplx{std::exp(-x * x), 0.0}; };
  data.v0 = [](double) { return cplx{0.0, 0.0}; };
  qlb::Grid g{0.5, 0, 0, 0};

  const qlb::SpinorField f4 = qlb::sample_initial(data, g, qlb::SamplingMethod::cell_average(4));
  CHECK(std::abs(f4.u[0].real() - exact) < 3e-9);
  CHECK(f4.u[0].imag() == 0.0);

  const qlb::SpinorField f64 = qlb::sample_initial(data, g, qlb::SamplingMethod::cell_average(64));
  CHECK(std::abs(f64.u[0].real() - exact) < 1e-15);
}

TEST_CASE("cell averaging is exact on data constant per cell") {
  qlb::Rng rng(5);
  const double h = 0.125;
  std::vector<cplx> uvals(32), vvals(32);
  for (auto& z : uvals) z = rng.disk(4.0);
  for (auto& z : vvals) z = rng.disk(4.0);
  qlb::InitialData data;
  data.u0 = [&](double x) {
    const long n = static_cast<long>(std::floor(x / h));
    return (n >= 0 && n < 32) ? uvals[n] : cplx{0.0, 0.0};
  };
  data.v0 = [&](double x) {
    const long n = static_cast<long>(std::floor(x / h));
    return (n >= 0 && n < 32) ? vvals[n] : cplx{0.0, 0.0};
  };
  qlb::Grid g{h, 0, 31, 0};
  const qlb::SpinorField f = qlb::sample_initial(data, g, qlb::SamplingMethod::cell_average(6));
  for (long n = 0; n < 32; ++n) {
    CHECK(f.u_at(n) == uvals[n]);
    CHECK(f.v_at(n) == vvals[n]);
  }
}

TEST_CASE("sampling refuses windows that truncate the declared support") {
  const qlb::InitialData data = qlb::make_gaussian_data(cplx{1.0, 0.0}, cplx{1.0, 0.0});
  qlb::Grid too_small{0.5, -6, 6, 0};
  CHECK_THROWS_WITH_AS(qlb::sample_initial(data, too_small),
                       doctest::Contains("truncates"), std::invalid_argument);
  qlb::Grid wide{0.5, -14, 14, 0};
  CHECK_NOTHROW(qlb::sample_initial(data, wide));
}

TEST_CASE("charge matches a long-double plain sum") {
  qlb::Rng rng(17);
  qlb::Grid g{0.01, -500, 500, 0};
  qlb::SpinorField f = qlb::SpinorField::zeros(g);
  long double plain = 0.0L;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.u[i] = rng.disk(3.0);
    f.v[i] = rng.disk(3.0);
    plain += (long double)qlb::abs2(f.u[i]) + (long double)qlb::abs2(f.v[i]);
  }
  const double want = static_cast<double>(0.01L * plain);
  CHECK(qlb::charge(f) == doctest::Approx(want).epsilon(1e-15));
}

TEST_CASE("shifting a field relabels the window and keeps the charge bitwise") {
  qlb::Rng rng(23);
  qlb::Grid g{0.2, -10, 10, 4};
  qlb::SpinorField f = qlb::SpinorField::zeros(g);
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.u[i] = rng.disk(2.0);
    f.v[i] = rng.disk(2.0);
  }
  const qlb::SpinorField s = qlb::shift_field(f, 1);
  CHECK(s.grid.n_min == -11);
  CHECK(s.grid.n_max == 9);
  CHECK(s.grid.k == 4);
  CHECK(s.u_at(2) == f.u_at(3));  // feature at 3 lands on 2
  CHECK(s.v_at(-11) == f.v_at(-10));
  CHECK(qlb::charge(s) == qlb::charge(f));
}

namespace {

// Dense midpoint integration of the squared difference of two
// piecewise-constant fields; exact when the dense step divides every cell.
double dense_l2(const qlb::SpinorField& a, const qlb::SpinorField& b, double step) {
  const double lo = std::min(a.grid.x(a.grid.n_min), b.grid.x(b.grid.n_min));
  const double hi = std::max(a.grid.x(a.grid.n_max + 1), b.grid.x(b.grid.n_max + 1));
  qlb::KahanSum acc;
  const long cells = static_cast<long>(std::llround((hi - lo) / step));
  for (long i = 0; i < cells; ++i) {
    const double mid = lo + (static_cast<double>(i) + 0.5) * step;
    const long na = static_cast<long>(std::floor(mid / a.grid.h));
    const long nb = static_cast<long>(std::floor(mid / b.grid.h));
    acc.add(step * qlb::abs2(a.u_at(na) - b.u_at(nb)));
    acc.add(step * qlb::abs2(a.v_at(na) - b.v_at(nb)));
  }
  return std::sqrt(acc.value());
}

qlb::SpinorField random_field(qlb::Rng& rng, double h, long lo, long hi) {
  qlb::SpinorField f = qlb::SpinorField::zeros(qlb::Grid{h, lo, hi, 0});
  for (std::size_t i = 0; i < f.size(); ++i) {
    f.u[i] = rng.disk(2.0);
    f.v[i] = rng.disk(2.0);
  }
  return f;
}

}  // namespace

TEST_CASE("piecewise-constant L2 distance matches a dense oracle") {
  qlb::Rng rng(31);

  SUBCASE("same grid") {
    const qlb::SpinorField a = random_field(rng, 0.25, -6, 9);
    const qlb::SpinorField b = random_field(rng, 0.25, -6, 9);
    qlb::KahanSum direct;
    for (std::size_t i = 0; i < a.size(); ++i) {
      direct.add(0.25 * qlb::abs2(a.u[i] - b.u[i]));
      direct.add(0.25 * qlb::abs2(a.v[i] - b.v[i]));
    }
    CHECK(qlb::l2_distance_pc(a, b) ==
          doctest::Approx(std::sqrt(direct.value())).epsilon(1e-12));
  }

  SUBCASE("refined grid against coarse, different windows") {
    const qlb::SpinorField a = random_field(rng, 0.25, -6, 9);
    const qlb::SpinorField b = random_field(rng, 0.125, -10, 24);
    const double want = dense_l2(a, b, 0.125 / 64.0);
    CHECK(qlb::l2_distance_pc(a, b) == doctest::Approx(want).epsilon(1e-12));
    CHECK(qlb::l2_distance_pc(b, a) == doctest::Approx(want).epsilon(1e-12));
  }

  SUBCASE("metric properties") {
    const qlb::SpinorField a = random_field(rng, 0.5, -4, 4);
    const qlb::SpinorField b = random_field(rng, 0.25, -8, 8);
    const qlb::SpinorField c = random_field(rng, 0.5, -3, 6);
    CHECK(qlb::l2_distance_pc(a, a) == 0.0);
    const double ab = qlb::l2_distance_pc(a, b);
    const double bc = qlb::l2_distance_pc(b, c);
    const double ac = qlb::l2_distance_pc(a, c);
    CHECK(ac <= ab + bc + 1e-12);
  }
}

TEST_CASE("zero-extension outside the window") {
  qlb::SpinorField f = qlb::SpinorField::zeros(qlb::Grid{0.5, 0, 3, 0});
  f.u[0] = cplx{1.0, 1.0};
  CHECK(f.u_at(-1) == cplx{0.0, 0.0});
  CHECK(f.v_at(99) == cplx{0.0, 0.0});
  CHECK(f.u_at(0) == cplx{1.0, 1.0});
}
