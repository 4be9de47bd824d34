#include "hmpc/scenario_config.hpp"

#include <charconv>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace hmpc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing characters");
    return d;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad numeric value for '" + key + "': " + v);
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: bad boolean for '" + key + "' (use true/false)");
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::istringstream is(v);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(parse_double(key, tok));
  if (out.empty()) throw std::invalid_argument("config: empty list for '" + key + "'");
  return out;
}

void require(bool ok, const std::string& key, const std::string& legal) {
  if (!ok) throw std::invalid_argument("config: value for '" + key + "' out of range; legal: " + legal);
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario s;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: malformed section at line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section != "profile" && section != "hand" && section != "tissue" &&
          section != "mpc" && section != "observer" && section != "tracking" &&
          section != "ident" && section != "plant")
        throw std::invalid_argument("config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const std::string qual = section.empty() ? key : section + "." + key;

    if (section.empty()) {
      if (key == "name") s.name = val;
      else if (key == "seed") s.seed = static_cast<std::uint64_t>(parse_double(key, val));
      else if (key == "ts") {
        s.Ts = parse_double(key, val);
        require(s.Ts > 0 && s.Ts <= 0.1, qual, "(0, 0.1] seconds");
      } else throw std::invalid_argument("config: unknown key '" + key + "'");
    } else if (section == "profile") {
      if (key == "peak1_n") s.profile.peak1 = parse_double(qual, val);
      else if (key == "fracture_peak_n") s.profile.fracture_peak = parse_double(qual, val);
      else if (key == "cutting_level_n") s.profile.cutting_level = parse_double(qual, val);
      else if (key == "durations_s") {
        const auto d = parse_list(qual, val);
        require(d.size() == 3, qual, "exactly three durations");
        s.profile.durations = {d[0], d[1], d[2]};
      } else throw std::invalid_argument("config: unknown key '" + qual + "'");
    } else if (section == "hand") {
      double* field = nullptr;
      if (key == "m_kg") field = &s.hand.m;
      else if (key == "k1_n_per_m") field = &s.hand.k1;
      else if (key == "k2_n_per_m") field = &s.hand.k2;
      else if (key == "b1_ns_per_m") field = &s.hand.b1;
      else if (key == "b2_ns_per_m") field = &s.hand.b2;
      else throw std::invalid_argument("config: unknown key '" + qual + "'");
      *field = parse_double(qual, val);
      require(*field > 0, qual, "> 0");
    } else if (section == "tissue") {
      if (key == "fs_poly") s.tissue.fs = parse_list(qual, val);
      else if (key == "xf_poly") s.tissue.xf = parse_list(qual, val);
      else if (key == "ff_poly") s.tissue.ff = parse_list(qual, val);
      else if (key == "a_poly") s.tissue.a = parse_list(qual, val);
      else if (key == "k_const") {
        s.tissue.K = parse_double(qual, val);
        require(s.tissue.K > 0, qual, "> 0");
      } else if (key == "b_const") {
        s.tissue.B = parse_double(qual, val);
        require(s.tissue.B > 0, qual, "> 0");
      } else if (key == "force_scale_n_per_unit") {
        s.tissue.force_scale = parse_double(qual, val);
        require(s.tissue.force_scale > 0, qual, "> 0");
      } else if (key == "live_rate_cutting") {
        s.tissue.live_rate_cutting = parse_bool(qual, val);
      } else throw std::invalid_argument("config: unknown key '" + qual + "'");
    } else if (section == "mpc") {
      if (key == "q_scale") {
        s.q_scale = parse_double(qual, val);
        require(s.q_scale > 0, qual, "> 0");
      } else if (key == "r_scale") {
        s.r_scale = parse_double(qual, val);
        require(s.r_scale > 0, qual, "> 0");
      } else if (key == "epsilon") {
        s.epsilon = parse_double(qual, val);
        require(s.epsilon > 0, qual, "> 0");
      } else if (key == "formulation") {
        if (val == "canonical") s.formulation = Formulation::CanonicalQuasiMinMax;
        else if (val == "paper") s.formulation = Formulation::PaperPrinted;
        else throw std::invalid_argument("config: formulation must be canonical or paper");
      } else if (key == "u_bound_tissue") {
        s.u_bound_tissue = parse_bool(qual, val);
      } else if (key == "u_bound_floor_n") {
        s.u_bound_floor = parse_double(qual, val);
        require(s.u_bound_floor > 0, qual, "> 0");
      } else throw std::invalid_argument("config: unknown key '" + qual + "'");
    } else if (section == "observer") {
      if (key == "rho2") {
        s.observer.rho2 = parse_double(qual, val);
        require(s.observer.rho2 > 0 && s.observer.rho2 <= 1.0, qual, "(0, 1]");
      } else if (key == "le_scale") {
        s.observer.le_scale = parse_double(qual, val);
        require(s.observer.le_scale > 0, qual, "> 0");
      } else throw std::invalid_argument("config: unknown key '" + qual + "'");
    } else if (section == "tracking") {
      if (key == "kp") {
        s.tracking.kp = parse_double(qual, val);
        require(s.tracking.kp > 0 && s.tracking.kp <= 1.0, qual, "(0, 1]");
      } else if (key == "v_ref_max") {
        s.tracking.v_ref_max = parse_double(qual, val);
        require(s.tracking.v_ref_max > 0, qual, "> 0");
      } else if (key == "v_est_cutoff_hz") {
        s.tracking.v_est_cutoff_hz = parse_double(qual, val);
        require(s.tracking.v_est_cutoff_hz > 0, qual, "> 0");
      } else throw std::invalid_argument("config: unknown key '" + qual + "'");
    } else if (section == "ident") {
      if (key == "enabled") s.ident.enabled = parse_bool(qual, val);
      else if (key == "refresh_steps") {
        s.ident.refresh_steps = static_cast<int>(parse_double(qual, val));
        require(s.ident.refresh_steps > 0, qual, "> 0");
      } else if (key == "lambda") {
        s.ident.lambda = parse_double(qual, val);
        require(s.ident.lambda > 0 && s.ident.lambda <= 1.0, qual, "(0, 1]");
      } else if (key == "p0") {
        s.ident.p0 = parse_double(qual, val);
        require(s.ident.p0 > 0, qual, "> 0");
      } else throw std::invalid_argument("config: unknown key '" + qual + "'");
    } else if (section == "plant") {
      if (key == "perturb") s.plant.perturb = parse_bool(qual, val);
      else if (key == "factor") {
        s.plant.factor = parse_double(qual, val);
        require(s.plant.factor >= 0 && s.plant.factor < 1.0, qual, "[0, 1)");
      } else throw std::invalid_argument("config: unknown key '" + qual + "'");
    }
  }
  return s;
}

Scenario load_scenario_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_scenario(buf.str());
}

namespace {

std::string fmt(double v) {
  char buf[40];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc()) return "0";
  return std::string(buf, end);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += fmt(v[i]);
  }
  return out;
}

}  // namespace

std::string serialize_scenario(const Scenario& s) {
  std::ostringstream os;
  os << "name = " << s.name << "\n";
  os << "seed = " << s.seed << "\n";
  os << "ts = " << fmt(s.Ts) << "\n\n";
  os << "[profile]\n";
  os << "peak1_n = " << fmt(s.profile.peak1) << "\n";
  os << "fracture_peak_n = " << fmt(s.profile.fracture_peak) << "\n";
  os << "cutting_level_n = " << fmt(s.profile.cutting_level) << "\n";
  os << "durations_s = " << fmt(s.profile.durations[0]) << ' ' << fmt(s.profile.durations[1])
     << ' ' << fmt(s.profile.durations[2]) << "\n\n";
  os << "[hand]\n";
  os << "m_kg = " << fmt(s.hand.m) << "\n";
  os << "k1_n_per_m = " << fmt(s.hand.k1) << "\n";
  os << "k2_n_per_m = " << fmt(s.hand.k2) << "\n";
  os << "b1_ns_per_m = " << fmt(s.hand.b1) << "\n";
  os << "b2_ns_per_m = " << fmt(s.hand.b2) << "\n\n";
  os << "[tissue]\n";
  os << "fs_poly = " << fmt_list(s.tissue.fs) << "\n";
  os << "k_const = " << fmt(s.tissue.K) << "\n";
  os << "b_const = " << fmt(s.tissue.B) << "\n";
  os << "xf_poly = " << fmt_list(s.tissue.xf) << "\n";
  os << "ff_poly = " << fmt_list(s.tissue.ff) << "\n";
  os << "a_poly = " << fmt_list(s.tissue.a) << "\n";
  os << "force_scale_n_per_unit = " << fmt(s.tissue.force_scale) << "\n";
  os << "live_rate_cutting = " << (s.tissue.live_rate_cutting ? "true" : "false") << "\n\n";
  os << "[mpc]\n";
  os << "q_scale = " << fmt(s.q_scale) << "\n";
  os << "r_scale = " << fmt(s.r_scale) << "\n";
  os << "epsilon = " << fmt(s.epsilon) << "\n";
  os << "formulation = "
     << (s.formulation == Formulation::CanonicalQuasiMinMax ? "canonical" : "paper") << "\n";
  os << "u_bound_tissue = " << (s.u_bound_tissue ? "true" : "false") << "\n";
  os << "u_bound_floor_n = " << fmt(s.u_bound_floor) << "\n\n";
  os << "[observer]\n";
  os << "rho2 = " << fmt(s.observer.rho2) << "\n";
  os << "le_scale = " << fmt(s.observer.le_scale) << "\n\n";
  os << "[tracking]\n";
  os << "kp = " << fmt(s.tracking.kp) << "\n";
  os << "v_ref_max = " << fmt(s.tracking.v_ref_max) << "\n";
  os << "v_est_cutoff_hz = " << fmt(s.tracking.v_est_cutoff_hz) << "\n\n";
  os << "[ident]\n";
  os << "enabled = " << (s.ident.enabled ? "true" : "false") << "\n";
  os << "refresh_steps = " << s.ident.refresh_steps << "\n";
  os << "lambda = " << fmt(s.ident.lambda) << "\n";
  os << "p0 = " << fmt(s.ident.p0) << "\n\n";
  os << "[plant]\n";
  os << "perturb = " << (s.plant.perturb ? "true" : "false") << "\n";
  os << "factor = " << fmt(s.plant.factor) << "\n";
  return os.str();
}

}  // namespace hmpc
