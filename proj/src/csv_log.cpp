#include "hmpc/csv_log.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace hmpc {

namespace {

void put(std::ostringstream& os, double v) {
  if (std::isnan(v)) {
    os << "nan";
  } else {
    os << std::fixed << std::setprecision(9) << v;
  }
}

}  // namespace

std::string csv_header() {
  return "t,region,x1,x2,x3,xh1,xh2,xh3,y,y_hat,x_m,x_ref,force,u,du,delta,u_max,v_next,"
         "psi1,psi2,psi3,psi4,est_k1,est_k2,est_b1,est_b2,feasible,tissue_phase,impedance";
}

std::string to_csv(const SimLog& log) {
  std::ostringstream os;
  os << csv_header() << '\n';
  for (const auto& r : log.rows) {
    put(os, r.t);
    os << ',' << r.region;
    for (int i = 0; i < 3; ++i) {
      os << ',';
      put(os, i < r.x_true.size() ? r.x_true(i) : 0.0);
    }
    for (int i = 0; i < 3; ++i) {
      os << ',';
      put(os, i < r.x_hat.size() ? r.x_hat(i) : 0.0);
    }
    os << ',';
    put(os, r.y);
    os << ',';
    put(os, r.y_hat);
    os << ',';
    put(os, r.x_m);
    os << ',';
    put(os, r.x_ref);
    os << ',';
    put(os, r.force);
    os << ',';
    put(os, r.u);
    os << ',';
    put(os, r.du);
    os << ',';
    put(os, r.delta);
    os << ',';
    put(os, r.u_max);
    os << ',';
    put(os, r.v_next);
    for (int i = 0; i < 4; ++i) {
      os << ',';
      put(os, i < r.psi.size() ? r.psi(i) : 0.0);
    }
    os << ',';
    put(os, r.hand_est.k1);
    os << ',';
    put(os, r.hand_est.k2);
    os << ',';
    put(os, r.hand_est.b1);
    os << ',';
    put(os, r.hand_est.b2);
    os << ',' << (r.feasible ? 1 : 0) << ',' << r.tissue_phase << ',';
    put(os, r.impedance);
    os << '\n';
  }
  return os.str();
}

void write_csv(const SimLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write CSV: " + path);
  f << to_csv(log);
  if (!f) throw std::runtime_error("I/O failure writing CSV: " + path);
}

std::string metadata_text(const SimLog& log) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(12);
  os << "scenario = " << log.scenario_name << '\n';
  os << "scenario_hash = " << std::hex << log.scenario_hash << std::dec << '\n';
  os << "version = " << kVersion << '\n';
  os << "rows = " << log.rows.size() << '\n';
  os << "fallback_steps = " << log.fallback_steps << '\n';
  os << "region_switches = " << log.region_switches << '\n';
  os << "observer.rho = " << log.design.rho << '\n';
  auto dump = [&os](const char* name, const Mat& M) {
    os << name << " =";
    for (int i = 0; i < M.rows(); ++i)
      for (int j = 0; j < M.cols(); ++j) os << ' ' << M(i, j);
    os << '\n';
  };
  if (log.design.Pe.size()) {
    dump("observer.Pe", log.design.Pe);
    dump("observer.Ye", log.design.Ye);
    dump("observer.Lo", log.design.Lo);
  }
  return os.str();
}

void write_metadata(const SimLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write metadata: " + path);
  f << metadata_text(log);
  if (!f) throw std::runtime_error("I/O failure writing metadata: " + path);
}

}  // namespace hmpc
