#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "qlb/checks.hpp"
#include "qlb/config.hpp"
#include "qlb/harness.hpp"
#include "qlb/io.hpp"

namespace qlb {

struct CliOptions {
  std::string out_dir = "qlb-out";
  std::optional<std::uint64_t> seed;  // overrides the config seed
};

namespace detail {

inline long level_of_time(double t, double h, long steps, const char* what) {
  const double raw = t / h;
  const long k = static_cast<long>(std::llround(raw));
  if (std::abs(raw - static_cast<double>(k)) > 1e-9 * std::max(1.0, std::abs(raw)))
    throw std::invalid_argument(std::string(what) + " " + format_double(t) +
                                " is not a multiple of h");
  if (k < 0 || k > steps)
    throw std::invalid_argument(std::string(what) + " " + format_double(t) +
                                " lies outside [0, T]");
  return k;
}

inline std::string padded_index(std::size_t i) {
  std::ostringstream os;
  os << std::setw(4) << std::setfill('0') << i;
  return os.str();
}

inline void echo_params(std::ostream& log, const RunConfig& cfg) {
  log << "model: " << cfg.preset_name() << " (m=" << format_double(cfg.params.m)
      << ", alpha=" << format_double(cfg.params.alpha)
      << ", beta=" << format_double(cfg.params.beta) << ")\n";
}

}  // namespace detail

// Evolve the configured initial data to T, recording the charge at every
// level and snapshots at the requested times. Exits nonzero when the
// relative charge drift exceeds 1e-9, which would mean a broken build.
inline int run_simulate(const RunConfig& cfg, const CliOptions& opts, std::ostream& log) {
  const double h = cfg.h_list.front();
  const long steps = detail::level_of_time(cfg.T, h, std::numeric_limits<long>::max(), "T");
  if (steps < 1) throw std::invalid_argument("simulate: T must cover at least one step");

  std::vector<double> snap_times = cfg.snapshot_times;
  if (snap_times.empty()) snap_times = {0.0, cfg.T};
  std::vector<long> snap_levels;
  for (double t : snap_times)
    snap_levels.push_back(detail::level_of_time(t, h, steps, "snapshot time"));

  const InitialData data = cfg.build_initial();
  if (!data.support_hint) throw std::invalid_argument("simulate: initial data lacks a support hint");
  const Grid base = detail::base_window(data.support_hint->first, data.support_hint->second, h,
                                        cfg.window_pad);
  SpinorField f = sample_initial(data, base, cfg.sampling);

  detail::echo_params(log, cfg);
  log << "grid: h=" << format_double(h) << " window=[" << base.n_min << "," << base.n_max
      << "] steps=" << steps << "\n";

  ensure_dir(opts.out_dir);
  std::vector<ChargePoint> charges;
  charges.push_back({0, 0.0, charge(f)});
  std::size_t snap_idx = 0;
  const auto snapshot_if_due = [&](long k, const SpinorField& field) {
    for (std::size_t i = 0; i < snap_levels.size(); ++i) {
      if (snap_levels[i] != k) continue;
      const std::string path = opts.out_dir + "/snapshot_" + detail::padded_index(i) + ".csv";
      write_snapshot_csv(path, field);
      log << "wrote " << path << " (t=" << format_double(field.grid.t()) << ")\n";
      ++snap_idx;
    }
  };
  snapshot_if_due(0, f);

  std::vector<StepObserver> observers;
  observers.push_back([&](long k, const SpinorField& field, const StepReport& rep) {
    charges.push_back({k, field.grid.t(), rep.charge_after});
    snapshot_if_due(k, field);
  });
  f = evolve(std::move(f), cfg.params, steps, nullptr, &observers);

  const std::string charge_path = opts.out_dir + "/charge.csv";
  write_charge_csv(charge_path, charges);
  log << "wrote " << charge_path << "\n";

  const double q0 = charges.front().charge;
  double drift = 0.0;
  for (const ChargePoint& c : charges)
    drift = std::max(drift, std::abs(c.charge - q0) / std::max(1e-300, q0));
  log << "charge drift: " << format_double(drift) << " (relative, over " << steps << " steps)\n";
  if (!(drift <= 1e-9)) {
    log << "FAIL: charge drift exceeds 1e-9\n";
    return 1;
  }
  log << "snapshots written: " << snap_idx << "\n";
  return 0;
}

// Grid-refinement studies: residual consistency against a smooth reference
// pair, L2 self-convergence of the scheme, or both.
inline int run_refine(const RunConfig& cfg, const CliOptions& opts, std::ostream& log) {
  const StudyConfig sc = cfg.study_config();
  ensure_dir(opts.out_dir);
  detail::echo_params(log, cfg);
  bool ok = true;

  if (cfg.study == "consistency" || cfg.study == "both") {
    const SmoothPair pair = smooth_pair_by_name(cfg.pair_name);
    const ConvergenceTable table = consistency_study(pair, sc);
    const std::string path = opts.out_dir + "/consistency_" + cfg.pair_name + ".csv";
    write_convergence_csv(path, table);
    log << "wrote " << path << "\n";
    for (const ConvergenceRow& r : table.rows)
      log << "  h=" << format_double(r.h) << " error=" << format_double(r.error)
          << " order=" << format_double(r.observed_order) << "\n";
    log << "consistency fitted slope: " << format_double(table.fitted_slope) << "\n";
    if (std::isfinite(table.fitted_slope) && table.fitted_slope < 0.9) {
      log << "FAIL: consistency slope below 0.9\n";
      ok = false;
    }
  }

  if (cfg.study == "self-convergence" || cfg.study == "both") {
    const ConvergenceTable table = self_convergence_study(cfg.build_initial(), sc);
    const std::string path = opts.out_dir + "/self_convergence.csv";
    write_convergence_csv(path, table);
    log << "wrote " << path << "\n";
    for (const ConvergenceRow& r : table.rows)
      log << "  h=" << format_double(r.h) << " error=" << format_double(r.error)
          << " order=" << format_double(r.observed_order) << "\n";
    for (std::size_t i = 1; i < table.rows.size(); ++i) {
      if (!(table.rows[i].error < table.rows[i - 1].error)) {
        log << "FAIL: self-convergence errors are not strictly decreasing\n";
        ok = false;
        break;
      }
    }
  }
  return ok ? 0 : 1;
}

// Shift-stability study over the configured triangle at every resolution.
inline int run_stability(const RunConfig& cfg, const CliOptions& opts, std::ostream& log) {
  if (cfg.tri_k1 < 1)
    throw std::invalid_argument("stability: tri_k1 must be at least 1 (triangle has no levels)");
  TriangleDomain tri{cfg.tri_n1, cfg.tri_k1, cfg.tri_k0};
  tri.validate();

  const StudyConfig sc = cfg.study_config();
  const std::vector<ShiftStabilityEntry> entries =
      shift_stability_study(cfg.build_initial(), cfg.shift_n0, sc, tri);

  ensure_dir(opts.out_dir);
  detail::echo_params(log, cfg);
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string path = opts.out_dir + "/stability_trace_h" + std::to_string(i) + ".csv";
    write_trace_csv(path, entries[i].trace);
    log << "wrote " << path << "\n";
  }

  const std::string summary_path = opts.out_dir + "/stability_summary.csv";
  {
    std::ofstream out = detail::open_out(summary_path);
    out << "h,n0,tri_n1,tri_k1,tri_k0,f1_ratio_max\n";
    for (const ShiftStabilityEntry& e : entries) {
      out << format_double(e.h) << ',' << e.n0 << ',' << e.tri.n1 << ',' << e.tri.k1 << ','
          << e.tri.k0 << ',' << format_double(e.f1_ratio_max) << "\n";
      if (!out) throw std::runtime_error("write failure on '" + summary_path + "'");
    }
  }
  log << "wrote " << summary_path << "\n";

  bool ok = true;
  for (const ShiftStabilityEntry& e : entries) {
    log << "h=" << format_double(e.h) << " n0=" << e.n0
        << " F1 growth ratio=" << format_double(e.f1_ratio_max) << "\n";
    if (!std::isfinite(e.f1_ratio_max)) ok = false;
  }
  for (std::size_t i = 1; i < entries.size(); ++i) {
    const double a = entries[i - 1].f1_ratio_max;
    const double b = entries[i].f1_ratio_max;
    if (a > 0.0 && b > 0.0) {
      const double ratio = std::max(a, b) / std::min(a, b);
      if (!(ratio <= 2.0)) {
        log << "FAIL: F1 growth ratio changed by " << format_double(ratio)
            << "x between resolutions\n";
        ok = false;
      }
    }
  }
  if (!ok && entries.size() < 2) log << "FAIL: growth ratio not finite\n";
  return ok ? 0 : 1;
}

// Property battery with config-selected ensemble sizes. One line per
// property; the first failing case is serialized for reproduction.
inline int run_check(const RunConfig& cfg, const CliOptions& opts, std::ostream& log) {
  CheckConfig cc;
  cc.seed = opts.seed.value_or(cfg.seed);
  cc.ensemble = cfg.ensemble_size;
  cc.bony_instances = cfg.bony_instances;
  cc.triangle_trials = cfg.triangle_trials;
  cc.gauge_samples = cfg.gauge_samples;
  cc.streaming_steps = cfg.streaming_steps;
  cc.roundtrip_steps = cfg.roundtrip_steps;

  const std::vector<PropertyResult> results = run_property_battery(cc);
  bool ok = true;
  for (const PropertyResult& r : results) {
    log << (r.pass ? "pass" : "FAIL") << "  " << r.name << "  worst=" << format_double(r.worst)
        << " bound=" << format_double(r.bound) << "\n";
    if (!r.pass) {
      ok = false;
      if (!r.detail.empty()) log << "      first failing case: " << r.detail << "\n";
    }
  }
  return ok ? 0 : 1;
}

inline int run_subcommand(const std::string& cmd, const RunConfig& cfg, const CliOptions& opts,
                          std::ostream& log) {
  RunConfig effective = cfg;
  if (opts.seed) effective.seed = *opts.seed;
  if (cmd == "simulate") return run_simulate(effective, opts, log);
  if (cmd == "refine") return run_refine(effective, opts, log);
  if (cmd == "stability") return run_stability(effective, opts, log);
  if (cmd == "check") return run_check(effective, opts, log);
  throw std::invalid_argument("unknown subcommand '" + cmd + "'");
}

}  // namespace qlb
