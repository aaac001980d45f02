#pragma once

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlb/harness.hpp"
#include "qlb/lattice.hpp"
#include "qlb/profiles.hpp"

namespace qlb {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] inline void fail_at(int line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

// Real number, optionally written as a fraction "p/q".
inline double parse_real(const std::string& raw, int line, const std::string& key) {
  const std::string s = trim(raw);
  if (s.empty()) fail_at(line, "key '" + key + "' has an empty value");
  const auto parse_plain = [&](const std::string& t) {
    char* end = nullptr;
    const double x = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size())
      fail_at(line, "key '" + key + "' expects a real number, got '" + s + "'");
    return x;
  };
  const std::size_t slash = s.find('/');
  if (slash != std::string::npos) {
    const double num = parse_plain(trim(s.substr(0, slash)));
    const double den = parse_plain(trim(s.substr(slash + 1)));
    if (den == 0.0) fail_at(line, "key '" + key + "' divides by zero");
    return num / den;
  }
  return parse_plain(s);
}

inline long parse_long(const std::string& raw, int line, const std::string& key) {
  const std::string s = trim(raw);
  char* end = nullptr;
  const long x = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    fail_at(line, "key '" + key + "' expects an integer, got '" + s + "'");
  return x;
}

inline std::uint64_t parse_u64(const std::string& raw, int line, const std::string& key) {
  const std::string s = trim(raw);
  char* end = nullptr;
  const unsigned long long x = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s[0] == '-' || end != s.c_str() + s.size())
    fail_at(line, "key '" + key + "' expects a nonnegative integer, got '" + s + "'");
  return static_cast<std::uint64_t>(x);
}

// Complex in the forms "a", "bi", "a+bi", "a-bi" (whitespace tolerated).
inline cplx parse_complex(const std::string& raw, int line, const std::string& key) {
  std::string s;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch))) s.push_back(ch);
  if (s.empty()) fail_at(line, "key '" + key + "' has an empty value");

  const auto bad = [&]() -> void {
    fail_at(line, "key '" + key + "' expects a complex number like 1.5-0.25i, got '" +
                      trim(raw) + "'");
  };
  const auto parse_plain = [&](const std::string& t) {
    if (t.empty()) bad();
    char* end = nullptr;
    const double x = std::strtod(t.c_str(), &end);
    if (end != t.c_str() + t.size()) bad();
    return x;
  };

  if (s.back() != 'i' && s.back() != 'I') return {parse_plain(s), 0.0};
  s.pop_back();  // imaginary part present
  // split at the last +/- that is not an exponent sign and not leading
  std::size_t split = std::string::npos;
  for (std::size_t i = s.size(); i-- > 1;) {
    if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
      split = i;
      break;
    }
  }
  if (split == std::string::npos) {
    // pure imaginary: "i", "-i", "2i", ...
    if (s.empty() || s == "+") return {0.0, 1.0};
    if (s == "-") return {0.0, -1.0};
    return {0.0, parse_plain(s)};
  }
  const double re = parse_plain(s.substr(0, split));
  std::string im_str = s.substr(split);
  if (im_str == "+") return {re, 1.0};
  if (im_str == "-") return {re, -1.0};
  return {re, parse_plain(im_str)};
}

// Comma- or whitespace-separated reals.
inline std::vector<double> parse_real_list(const std::string& raw, int line,
                                           const std::string& key) {
  std::vector<double> out;
  std::string token;
  const auto flush = [&]() {
    if (!token.empty()) {
      out.push_back(parse_real(token, line, key));
      token.clear();
    }
  };
  for (char ch : raw) {
    if (ch == ',' || std::isspace(static_cast<unsigned char>(ch)))
      flush();
    else
      token.push_back(ch);
  }
  flush();
  if (out.empty()) fail_at(line, "key '" + key + "' expects at least one number");
  return out;
}

// Semicolon-separated segments "lo,hi,re,im".
inline std::vector<PiecewiseSegment> parse_segments(const std::string& raw, int line,
                                                    const std::string& key) {
  std::vector<PiecewiseSegment> out;
  std::size_t start = 0;
  while (start <= raw.size()) {
    std::size_t end = raw.find(';', start);
    const std::string chunk = trim(raw.substr(start, end == std::string::npos ? std::string::npos
                                                                              : end - start));
    if (!chunk.empty()) {
      const std::vector<double> vals = parse_real_list(chunk, line, key);
      if (vals.size() != 4)
        fail_at(line, "key '" + key + "' expects segments 'lo,hi,re,im' separated by ';'");
      out.push_back({vals[0], vals[1], cplx{vals[2], vals[3]}});
    }
    if (end == std::string::npos) break;
    start = end + 1;
  }
  if (out.empty()) fail_at(line, "key '" + key + "' has no segments");
  return out;
}

}  // namespace detail

// Everything the CLI subcommands can be asked to do, with defaults.
struct RunConfig {
  ModelParams params;
  double T = 1.0;
  std::vector<double> h_list;

  std::string initial = "gaussian";
  SamplingMethod sampling = SamplingMethod::cell_average(4);
  double K = 10.0;
  int quadrature_order = 6;
  NonlinearityConvention convention = NonlinearityConvention::scheme_consistent;
  double window_pad = 1.0;
  std::uint64_t seed = 1;

  std::vector<double> snapshot_times;  // empty: {0, T}

  std::string study = "self-convergence";  // refine: consistency | self-convergence | both
  std::string pair_name = "crossing-gaussians";

  long shift_n0 = 1;
  long tri_n1 = 0;
  long tri_k1 = 0;
  long tri_k0 = 0;

  long ensemble_size = 200000;
  long bony_instances = 1000;
  long triangle_trials = 100;
  long gauge_samples = 100000;
  long streaming_steps = 1000;
  long roundtrip_steps = 100;

  cplx gaussian_amp_u{1.0, 0.0};
  cplx gaussian_amp_v{1.0, 0.0};
  double gaussian_center = 0.0;
  double gaussian_sigma = 1.0;
  double box_lo = 0.0;
  double box_hi = 1.0;
  cplx box_value_u{1.0, 0.0};
  cplx box_value_v{1.0, 0.0};
  double bump_amp = 1.0;
  double bump_width = 1.0;
  std::vector<PiecewiseSegment> piecewise_u;
  std::vector<PiecewiseSegment> piecewise_v;

  std::string preset_name() const {
    if (params.is_thirring()) return "thirring (alpha=1, beta=0)";
    if (params.is_gross_neveu()) return "gross-neveu (alpha=0, beta=1/4)";
    return "custom";
  }

  InitialData build_initial() const {
    if (initial == "gaussian")
      return make_gaussian_data(gaussian_amp_u, gaussian_amp_v, gaussian_center, gaussian_sigma);
    if (initial == "box") return make_box_data(box_lo, box_hi, box_value_u, box_value_v);
    if (initial == "bump") return make_bump_data(bump_amp, bump_width);
    if (initial == "piecewise") return make_piecewise_data(piecewise_u, piecewise_v);
    if (initial == "zero") return make_zero_data();
    throw ConfigError("unknown initial profile '" + initial +
                      "' (known: gaussian, box, bump, piecewise, zero)");
  }

  StudyConfig study_config() const {
    StudyConfig sc;
    sc.params = params;
    sc.T = T;
    sc.h_list = h_list;
    sc.sampling = sampling;
    sc.quadrature_order = quadrature_order;
    sc.K = K;
    sc.convention = convention;
    sc.window_pad = window_pad;
    return sc;
  }
};

// Line-oriented "key = value" with '#' comments. Unknown keys, duplicate
// keys, bad types, and missing required keys are errors that name the line.
inline RunConfig parse_config(const std::string& text) {
  static const std::set<std::string> known = {
      "m", "alpha", "beta", "T", "h", "h_list", "initial", "sampling", "sampling_order", "K",
      "quadrature_order", "convention", "window_pad", "seed", "snapshot_times", "study", "pair",
      "shift_n0", "tri_n1", "tri_k1", "tri_k0", "ensemble_size", "bony_instances",
      "triangle_trials", "gauge_samples", "streaming_steps", "roundtrip_steps", "gaussian_amp_u",
      "gaussian_amp_v", "gaussian_center", "gaussian_sigma", "box_lo", "box_hi", "box_value_u",
      "box_value_v", "bump_amp", "bump_width", "piecewise_u", "piecewise_v"};

  std::map<std::string, std::pair<std::string, int>> kv;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    std::string line = text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
    pos = end == std::string::npos ? text.size() + 1 : end + 1;
    ++line_no;

    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      detail::fail_at(line_no, "expected 'key = value', got '" + line + "'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty()) detail::fail_at(line_no, "empty key");
    if (!known.count(key)) detail::fail_at(line_no, "unknown key '" + key + "'");
    if (kv.count(key)) detail::fail_at(line_no, "duplicate key '" + key + "'");
    kv[key] = {value, line_no};
  }

  const auto line_of = [&](const std::string& key) { return kv.at(key).second; };
  const auto has = [&](const std::string& key) { return kv.count(key) != 0; };
  const auto value_of = [&](const std::string& key) { return kv.at(key).first; };

  for (const char* req : {"m", "alpha", "beta", "T"})
    if (!has(req)) throw ConfigError(std::string("config: missing required key '") + req + "'");
  if (!has("h") && !has("h_list"))
    throw ConfigError("config: one of 'h' or 'h_list' is required");
  if (has("h") && has("h_list"))
    detail::fail_at(line_of("h_list"), "give either 'h' or 'h_list', not both");

  RunConfig cfg;
  cfg.params.m = detail::parse_real(value_of("m"), line_of("m"), "m");
  cfg.params.alpha = detail::parse_real(value_of("alpha"), line_of("alpha"), "alpha");
  cfg.params.beta = detail::parse_real(value_of("beta"), line_of("beta"), "beta");
  try {
    cfg.params.validate();
  } catch (const std::invalid_argument& e) {
    detail::fail_at(line_of("m"), e.what());
  }
  cfg.T = detail::parse_real(value_of("T"), line_of("T"), "T");
  if (!(cfg.T > 0.0)) detail::fail_at(line_of("T"), "T must be positive");
  if (has("h")) {
    cfg.h_list = {detail::parse_real(value_of("h"), line_of("h"), "h")};
    if (!(cfg.h_list[0] > 0.0)) detail::fail_at(line_of("h"), "h must be positive");
  } else {
    cfg.h_list = detail::parse_real_list(value_of("h_list"), line_of("h_list"), "h_list");
    for (std::size_t i = 0; i < cfg.h_list.size(); ++i) {
      if (!(cfg.h_list[i] > 0.0)) detail::fail_at(line_of("h_list"), "h values must be positive");
      if (i > 0 && !(cfg.h_list[i] < cfg.h_list[i - 1]))
        detail::fail_at(line_of("h_list"), "h_list must be strictly decreasing");
    }
  }

  if (has("initial")) cfg.initial = detail::trim(value_of("initial"));
  if (has("sampling")) {
    const std::string s = detail::trim(value_of("sampling"));
    if (s == "point")
      cfg.sampling = SamplingMethod::point_sample();
    else if (s == "cell-average")
      cfg.sampling = SamplingMethod::cell_average(4);
    else
      detail::fail_at(line_of("sampling"), "sampling must be 'point' or 'cell-average'");
  }
  if (has("sampling_order")) {
    const long q = detail::parse_long(value_of("sampling_order"), line_of("sampling_order"),
                                      "sampling_order");
    if (q < 1 || q > 256) detail::fail_at(line_of("sampling_order"), "sampling_order must be in [1,256]");
    if (cfg.sampling.kind == SamplingMethod::Kind::cell_average)
      cfg.sampling.order = static_cast<int>(q);
  }
  if (has("K")) {
    cfg.K = detail::parse_real(value_of("K"), line_of("K"), "K");
    if (!(cfg.K > 0.0)) detail::fail_at(line_of("K"), "K must be positive");
  }
  if (has("quadrature_order")) {
    const long q = detail::parse_long(value_of("quadrature_order"), line_of("quadrature_order"),
                                      "quadrature_order");
    if (q < 1 || q > 256)
      detail::fail_at(line_of("quadrature_order"), "quadrature_order must be in [1,256]");
    cfg.quadrature_order = static_cast<int>(q);
  }
  if (has("convention")) {
    const std::string c = detail::trim(value_of("convention"));
    if (c == "scheme")
      cfg.convention = NonlinearityConvention::scheme_consistent;
    else if (c == "wbar")
      cfg.convention = NonlinearityConvention::wbar_gradient;
    else
      detail::fail_at(line_of("convention"), "convention must be 'scheme' or 'wbar'");
  }
  if (has("window_pad")) {
    cfg.window_pad = detail::parse_real(value_of("window_pad"), line_of("window_pad"), "window_pad");
    if (!(cfg.window_pad >= 0.0)) detail::fail_at(line_of("window_pad"), "window_pad must be nonnegative");
  }
  if (has("seed")) cfg.seed = detail::parse_u64(value_of("seed"), line_of("seed"), "seed");
  if (has("snapshot_times"))
    cfg.snapshot_times =
        detail::parse_real_list(value_of("snapshot_times"), line_of("snapshot_times"),
                                "snapshot_times");
  if (has("study")) {
    cfg.study = detail::trim(value_of("study"));
    if (cfg.study != "consistency" && cfg.study != "self-convergence" && cfg.study != "both")
      detail::fail_at(line_of("study"),
                      "study must be 'consistency', 'self-convergence', or 'both'");
  }
  if (has("pair")) cfg.pair_name = detail::trim(value_of("pair"));

  const auto read_long = [&](const char* key, long& dst) {
    if (has(key)) dst = detail::parse_long(value_of(key), line_of(key), key);
  };
  read_long("shift_n0", cfg.shift_n0);
  read_long("tri_n1", cfg.tri_n1);
  read_long("tri_k1", cfg.tri_k1);
  read_long("tri_k0", cfg.tri_k0);
  read_long("ensemble_size", cfg.ensemble_size);
  read_long("bony_instances", cfg.bony_instances);
  read_long("triangle_trials", cfg.triangle_trials);
  read_long("gauge_samples", cfg.gauge_samples);
  read_long("streaming_steps", cfg.streaming_steps);
  read_long("roundtrip_steps", cfg.roundtrip_steps);
  for (const char* key : {"ensemble_size", "bony_instances", "triangle_trials", "gauge_samples",
                          "streaming_steps", "roundtrip_steps"})
    if (has(key) && detail::parse_long(value_of(key), line_of(key), key) < 1)
      detail::fail_at(line_of(key), std::string("key '") + key + "' must be positive");

  const auto read_complex = [&](const char* key, cplx& dst) {
    if (has(key)) dst = detail::parse_complex(value_of(key), line_of(key), key);
  };
  const auto read_real = [&](const char* key, double& dst) {
    if (has(key)) dst = detail::parse_real(value_of(key), line_of(key), key);
  };
  read_complex("gaussian_amp_u", cfg.gaussian_amp_u);
  read_complex("gaussian_amp_v", cfg.gaussian_amp_v);
  read_real("gaussian_center", cfg.gaussian_center);
  read_real("gaussian_sigma", cfg.gaussian_sigma);
  read_real("box_lo", cfg.box_lo);
  read_real("box_hi", cfg.box_hi);
  read_complex("box_value_u", cfg.box_value_u);
  read_complex("box_value_v", cfg.box_value_v);
  read_real("bump_amp", cfg.bump_amp);
  read_real("bump_width", cfg.bump_width);
  if (has("piecewise_u"))
    cfg.piecewise_u = detail::parse_segments(value_of("piecewise_u"), line_of("piecewise_u"),
                                             "piecewise_u");
  if (has("piecewise_v"))
    cfg.piecewise_v = detail::parse_segments(value_of("piecewise_v"), line_of("piecewise_v"),
                                             "piecewise_v");
  return cfg;
}

}  // namespace qlb
