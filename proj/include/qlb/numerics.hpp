#pragma once

#include <array>
#include <charconv>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace qlb {

using cplx = std::complex<double>;

// Neumaier-compensated accumulator; used for every reduction that feeds a
// conservation or stability check.
class KahanSum {
 public:
  void add(double x) {
    double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline bool is_finite(cplx z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline double abs2(cplx z) { return z.real() * z.real() + z.imag() * z.imag(); }

// Gauss-Legendre rule mapped to [0,1]; weights sum to 1.
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

inline const GaussRule& gauss_legendre(int q) {
  if (q < 1 || q > 256) throw std::invalid_argument("gauss_legendre: order must be in [1,256]");
  static std::map<int, GaussRule> cache;
  auto it = cache.find(q);
  if (it != cache.end()) return it->second;

  GaussRule rule;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  const int n = q;
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p0 = 1.0, p1 = x;
      if (n == 1) { p1 = x; }
      for (int j = 2; j <= n; ++j) {
        double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      pp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / pp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        p0 = 1.0; p1 = x;
        for (int j = 2; j <= n; ++j) {
          double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
          p0 = p1;
          p1 = p2;
        }
        pp = n * (x * p1 - p0) / (x * x - 1.0);
        break;
      }
    }
    double w = 2.0 / ((1.0 - x * x) * pp * pp);
    // map [-1,1] -> [0,1]
    rule.nodes[i] = 0.5 * (1.0 - x);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + x);
    rule.weights[i] = 0.5 * w;
    rule.weights[n - 1 - i] = 0.5 * w;
  }
  auto [pos, inserted] = cache.emplace(q, std::move(rule));
  return pos->second;
}

// Shortest round-trip decimal form; identical input bits give identical text.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  return std::string(buf.data(), res.ptr);
}

// splitmix64-seeded xorshift-style generator with an explicit 53-bit uniform
// map, so streams are identical across platforms for a given seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t z = seed;
    for (auto& s : state_) {
      z += 0x9e3779b97f4a7c15ULL;
      std::uint64_t t = z;
      t = (t ^ (t >> 30)) * 0xbf58476d1ce4e5b9ULL;
      t = (t ^ (t >> 27)) * 0x94d049bb133111ebULL;
      s = t ^ (t >> 31);
    }
  }

  std::uint64_t next_u64() {
    // xoshiro256++
    std::uint64_t r = rotl(state_[0] + state_[3], 23) + state_[0];
    std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return r;
  }

  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // uniform modulus in [0, rmax], uniform phase
  cplx disk(double rmax) {
    double r = rmax * uniform();
    double phi = 2.0 * M_PI * uniform();
    return {r * std::cos(phi), r * std::sin(phi)};
  }

  long integer(long lo, long hi) {  // inclusive
    return lo + static_cast<long>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> state_{};
};

// Least-squares slope of log2(y) against log2(x).
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("loglog_slope: need two matched samples");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double lx = std::log2(x[i]);
    double ly = std::log2(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qlb
