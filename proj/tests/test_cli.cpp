#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hmpc/csv_log.hpp"
#include "hmpc/scenario_config.hpp"
#include "hmpc/svg_plot.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace hmpc;
namespace fs = std::filesystem;

TEST_CASE("empty config yields the all-defaults scenario") {
  const Scenario s = parse_scenario("");
  const Scenario d;
  CHECK(s.hand.m == d.hand.m);
  CHECK(s.hand.k1 == 24.06);
  CHECK(s.tissue.K == 63.62);
  CHECK(s.tissue.B == 0.021);
  CHECK(s.q_scale == 1.5);
  CHECK(s.r_scale == 1.0);
  CHECK(s.epsilon == 0.001);
  CHECK(s.observer.rho2 == d.observer.rho2);
  CHECK(s.formulation == Formulation::CanonicalQuasiMinMax);
}

TEST_CASE("overrides pass through") {
  const Scenario s = parse_scenario("[observer]\nrho2 = 0.9\nle_scale = 2.0\n");
  CHECK(s.observer.rho2 == 0.9);
  CHECK(s.observer.le_scale == 2.0);
  const Scenario t = parse_scenario("[mpc]\nformulation = paper\n");
  CHECK(t.formulation == Formulation::PaperPrinted);
}

TEST_CASE("unknown keys are rejected by name") {
  try {
    parse_scenario("[ident]\nforgeting_factor = 0.98\n");
    FAIL("expected parse error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("forgeting_factor") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scenario("[nosuch]\nx = 1\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario("stray_key = 1\n"), std::invalid_argument);
}

TEST_CASE("out-of-range values name the legal range") {
  try {
    parse_scenario("[observer]\nrho2 = 1.5\n");
    FAIL("expected range error");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("(0, 1]") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_scenario("[tracking]\nkp = 0\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_scenario("[hand]\nm_kg = -1\n"), std::invalid_argument);
}

TEST_CASE("parse-serialize-parse is the identity") {
  Scenario s;
  s.name = "roundtrip";
  s.seed = 77;
  s.profile = {2.5, 9.0, 5.5, {1.5, 2.5, 3.5}};
  s.hand.k1 = 30.0;
  s.tissue.force_scale = 0.02;
  s.tissue.live_rate_cutting = true;
  s.q_scale = 2.0;
  s.formulation = Formulation::PaperPrinted;
  s.observer.rho2 = 0.85;
  s.tracking.kp = 0.11;
  s.ident.enabled = false;
  s.plant.perturb = true;
  s.plant.factor = 0.07;

  const std::string text = serialize_scenario(s);
  const Scenario p = parse_scenario(text);
  CHECK(serialize_scenario(p) == text);
  CHECK(scenario_hash(p) == scenario_hash(s));
}

TEST_CASE("CSV golden format: column order and fixed 9-decimal notation") {
  SimLog log;
  log.scenario_name = "golden";
  SimRow r;
  r.t = 0.005;
  r.region = 2;
  r.x_true = Vec::Zero(3);
  r.x_true << 0.1, -0.25, 1.0 / 3.0;
  r.x_hat = Vec::Zero(3);
  r.y = 1e-4;
  r.y_hat = 2e-4;
  r.x_m = 0.0123456789;
  r.x_ref = -1.0;
  r.force = 5.0;
  r.u = 2.5;
  r.du = 0.125;
  r.delta = 42.0;
  r.u_max = 10.0;
  r.v_next = 1.5;
  r.psi = Vec::Zero(4);
  r.psi << -0.5, 0.25, 0.0, 1.0;
  r.hand_est = default_hand();
  r.feasible = true;
  r.tissue_phase = 1;
  r.impedance = std::numeric_limits<double>::quiet_NaN();
  log.rows.push_back(r);

  const std::string expect =
      "t,region,x1,x2,x3,xh1,xh2,xh3,y,y_hat,x_m,x_ref,force,u,du,delta,u_max,v_next,"
      "psi1,psi2,psi3,psi4,est_k1,est_k2,est_b1,est_b2,feasible,tissue_phase,impedance\n"
      "0.005000000,2,0.100000000,-0.250000000,0.333333333,0.000000000,0.000000000,"
      "0.000000000,0.000100000,0.000200000,0.012345679,-1.000000000,5.000000000,"
      "2.500000000,0.125000000,42.000000000,10.000000000,1.500000000,"
      "-0.500000000,0.250000000,0.000000000,1.000000000,"
      "24.060000000,42.930000000,5.600000000,14.040000000,1,1,nan\n";
  CHECK(to_csv(log) == expect);
}

TEST_CASE("SVG renderer emits valid polylines with gaps") {
  PlotSeries s;
  s.label = "test";
  s.x = {0.0, 1.0, 2.0, 3.0};
  s.y = {0.0, 1.0, std::numeric_limits<double>::quiet_NaN(), 2.0};
  const std::string svg = render_svg("title", {s});
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  // gap splits the path into two move commands
  const auto first_m = svg.find("d=\"M");
  REQUIRE(first_m != std::string::npos);
  const auto second_m = svg.find("M", svg.find("L", first_m));
  CHECK(second_m != std::string::npos);
}

TEST_CASE("CLI binary: exit codes and output layout") {
  const char* cli = HMPC_CLI_PATH;
  REQUIRE(fs::exists(cli));
  const std::string tmp = (fs::temp_directory_path() / "hmpc_cli_test").string();
  fs::remove_all(tmp);

  // parse failure -> nonzero exit
  {
    std::ofstream bad(tmp + ".cfg");
    bad << "[mpc]\nnonsense_key = 1\n";
  }
  int rc = std::system((std::string(cli) + " run --scenario " + tmp +
                        ".cfg --out " + tmp + " > /dev/null 2>&1")
                           .c_str());
  CHECK(rc != 0);

  // check-matrices always succeeds
  rc = std::system((std::string(cli) + " check-matrices > /dev/null 2>&1").c_str());
  CHECK(rc == 0);
  rc = std::system((std::string(cli) + " check-matrices --perturb > /dev/null 2>&1").c_str());
  CHECK(rc == 0);

  // short run without plots: exactly one CSV and one metadata sidecar
  {
    std::ofstream cfg(tmp + ".cfg");
    cfg << "name = cli-short\n[profile]\npeak1_n = 1.5\nfracture_peak_n = 4.0\n"
           "cutting_level_n = 2.8\ndurations_s = 0.3 0.4 0.3\n";
  }
  rc = std::system((std::string(cli) + " run --scenario " + tmp + ".cfg --out " + tmp +
                    "/run1 > /dev/null 2>&1")
                       .c_str());
  REQUIRE(rc == 0);
  size_t files = 0, csv = 0, meta = 0, svg = 0;
  for (const auto& e : fs::directory_iterator(tmp + "/run1")) {
    ++files;
    const auto ext = e.path().extension().string();
    if (ext == ".csv") ++csv;
    if (ext == ".txt") ++meta;
    if (ext == ".svg") ++svg;
  }
  CHECK(files == 2);
  CHECK(csv == 1);
  CHECK(meta == 1);
  CHECK(svg == 0);

  // with plots: CSV + metadata + 5 SVGs
  rc = std::system((std::string(cli) + " run --scenario " + tmp + ".cfg --out " + tmp +
                    "/run2 --plots > /dev/null 2>&1")
                       .c_str());
  REQUIRE(rc == 0);
  svg = 0;
  for (const auto& e : fs::directory_iterator(tmp + "/run2"))
    if (e.path().extension() == ".svg") ++svg;
  CHECK(svg == 5);

  // batch of three short scenarios: three disjoint hash-named directories
  for (int i = 0; i < 3; ++i) {
    std::ofstream cfg(tmp + ".b" + std::to_string(i) + ".cfg");
    cfg << "name = batch" << i
        << "\n[profile]\npeak1_n = 1.5\nfracture_peak_n = 4.0\ncutting_level_n = 2.8\n"
           "durations_s = 0.3 0.4 0.3\n";
  }
  rc = std::system((std::string(cli) + " batch --scenario " + tmp + ".b0.cfg --scenario " +
                    tmp + ".b1.cfg --scenario " + tmp + ".b2.cfg --out " + tmp +
                    "/batch > /dev/null 2>&1")
                       .c_str());
  REQUIRE(rc == 0);
  size_t dirs = 0;
  for (const auto& e : fs::directory_iterator(tmp + "/batch"))
    if (e.is_directory()) ++dirs;
  CHECK(dirs == 3);
}
