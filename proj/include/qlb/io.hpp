#pragma once

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qlb/functionals.hpp"
#include "qlb/harness.hpp"
#include "qlb/lattice.hpp"
#include "qlb/numerics.hpp"

namespace qlb {

inline void ensure_dir(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec) throw std::runtime_error("cannot create directory '" + path + "': " + ec.message());
}

namespace detail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

}  // namespace detail

// Columns: n,x,re_u,im_u,re_v,im_v with a "# t=... h=..." header comment.
inline void write_snapshot_csv(const std::string& path, const SpinorField& f) {
  f.validate();
  std::ofstream out = detail::open_out(path);
  out << "# t=" << format_double(f.grid.t()) << " h=" << format_double(f.grid.h) << "\n";
  out << "n,x,re_u,im_u,re_v,im_v\n";
  for (long n = f.grid.n_min; n <= f.grid.n_max; ++n) {
    const cplx u = f.u[f.index(n)];
    const cplx v = f.v[f.index(n)];
    out << n << ',' << format_double(f.grid.x(n)) << ',' << format_double(u.real()) << ','
        << format_double(u.imag()) << ',' << format_double(v.real()) << ','
        << format_double(v.imag()) << "\n";
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

struct ChargePoint {
  long k = 0;
  double t = 0.0;
  double charge = 0.0;
};

inline void write_charge_csv(const std::string& path, const std::vector<ChargePoint>& rows) {
  std::ofstream out = detail::open_out(path);
  out << "k,t,charge\n";
  for (const auto& r : rows)
    out << r.k << ',' << format_double(r.t) << ',' << format_double(r.charge) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// Columns: k,t,L0,L0_tilde,Lg,D0,D0_tilde,L1,Q1,D1,F1,Lambda,rho.
inline void write_trace_csv(const std::string& path, const FunctionalTrace& trace) {
  std::ofstream out = detail::open_out(path);
  out << "# h=" << format_double(trace.h) << " K=" << format_double(trace.K) << "\n";
  out << "k,t,L0,L0_tilde,Lg,D0,D0_tilde,L1,Q1,D1,F1,Lambda,rho\n";
  for (const auto& r : trace.levels) {
    out << r.k << ',' << format_double(static_cast<double>(r.k) * trace.h) << ','
        << format_double(r.L0) << ',' << format_double(r.L0_tilde) << ',' << format_double(r.Lg)
        << ',' << format_double(r.D0) << ',' << format_double(r.D0_tilde) << ','
        << format_double(r.L1) << ',' << format_double(r.Q1) << ',' << format_double(r.D1) << ','
        << format_double(r.F1) << ',' << format_double(r.Lambda) << ',' << format_double(r.rho)
        << "\n";
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

// Columns: h,steps,error,observed_order plus label/slope header comments.
inline void write_convergence_csv(const std::string& path, const ConvergenceTable& table) {
  std::ofstream out = detail::open_out(path);
  out << "# " << table.label << "\n";
  out << "# fitted_slope=" << format_double(table.fitted_slope) << "\n";
  out << "h,steps,error,observed_order\n";
  for (const auto& r : table.rows)
    out << format_double(r.h) << ',' << r.steps << ',' << format_double(r.error) << ','
        << format_double(r.observed_order) << "\n";
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace qlb
