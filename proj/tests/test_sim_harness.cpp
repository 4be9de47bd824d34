#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hmpc/csv_log.hpp"
#include "hmpc/sim_harness.hpp"

#include <cmath>

using namespace hmpc;

namespace {

// short three-phase scenario for fast end-to-end checks
Scenario short_scenario() {
  Scenario s;
  s.name = "short";
  s.profile = {1.5, 4.0, 2.8, {0.4, 0.6, 0.3}};
  return s;
}

}  // namespace

TEST_CASE("profile has exactly two downward jumps and peaks at the fracture level") {
  const ForceProfile fp = synth_force_profile(2.0, 7.0, 4.0, {2.0, 4.0, 2.0});
  CHECK(fp.samples.size() == 1600);
  int drops = 0;
  double mx = 0.0;
  for (size_t k = 1; k < fp.samples.size(); ++k) {
    const double d = fp.samples[k] - fp.samples[k - 1];
    if (d < -0.05) ++drops;
    mx = std::max(mx, fp.samples[k]);
  }
  CHECK(drops == 2);
  CHECK(mx == doctest::Approx(7.0).epsilon(0.01));
}

TEST_CASE("profile argument validation") {
  CHECK_THROWS_AS(synth_force_profile(2, 7, 4, {0.0, 0.0, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(synth_force_profile(2, 1.5, 1, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(synth_force_profile(-1, 7, 4, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("rmsd_percent definition") {
  std::vector<double> ramp(101), plus(101);
  for (int i = 0; i <= 100; ++i) {
    ramp[i] = i / 100.0;
    plus[i] = ramp[i] + 0.01;
  }
  CHECK(rmsd_percent(ramp, ramp) == 0.0);
  CHECK(rmsd_percent(plus, ramp) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> flat(5, 2.0);
  CHECK_THROWS_AS(rmsd_percent(flat, flat), std::invalid_argument);
  std::vector<double> shortv(1, 0.0);
  CHECK_THROWS_AS(rmsd_percent(shortv, shortv), std::invalid_argument);
}

TEST_CASE("impedance trace: linear spring and dead-zone") {
  std::vector<double> x = {0.0, 0.01, 0.2, 1.0, 2.0};
  std::vector<double> f(x.size());
  for (size_t i = 0; i < x.size(); ++i) f[i] = 3.5 * x[i];
  const auto z = impedance_trace(f, x);
  CHECK_FALSE(z[0].has_value());  // |x| < 0.05 mm
  CHECK_FALSE(z[1].has_value());
  for (size_t i = 2; i < z.size(); ++i) {
    REQUIRE(z[i].has_value());
    CHECK(*z[i] == doctest::Approx(3.5));
  }
  std::vector<double> tiny(4, 0.001), ftiny(4, 1.0);
  const auto zg = impedance_trace(ftiny, tiny);
  for (const auto& v : zg) CHECK_FALSE(v.has_value());
}

TEST_CASE("zero force profile keeps everything at the origin") {
  Scenario s = short_scenario();
  SimLog log = run_closed_loop(s);
  // replace the profile with zeros through a custom run: emulate by checking
  // that with zero force the inversion yields zero reference; use the tissue
  // module directly plus a zero-input closed loop via the scenario with a
  // tiny peak instead (profile forces are strictly positive by contract), so
  // here we check the x_ref = 0 path of the tissue inversion only.
  TissueState ts;
  const auto r = invert_force_to_reference(0.0, 0.0, ts, s.tissue);
  CHECK(r.x_ref == 0.0);
  CHECK(log.rows.size() == static_cast<size_t>(std::llround(1.3 / s.Ts)));
}

TEST_CASE("closed loop: input bound holds in every row; log shape is sane") {
  Scenario s = short_scenario();
  const SimLog log = run_closed_loop(s);
  REQUIRE(log.rows.size() == 260);
  double t_prev = -1.0;
  for (const auto& r : log.rows) {
    CHECK(std::abs(r.u) <= r.u_max + 1e-12);
    CHECK(r.t > t_prev);
    t_prev = r.t;
    CHECK(std::isfinite(r.x_m));
  }
  CHECK(log.scenario_hash == scenario_hash(s));
}

TEST_CASE("determinism: identical scenarios produce byte-identical CSV logs") {
  Scenario s = short_scenario();
  const SimLog a = run_closed_loop(s);
  const SimLog b = run_closed_loop(s);
  CHECK(to_csv(a) == to_csv(b));
  CHECK(metadata_text(a) == metadata_text(b));
}

TEST_CASE("observer fixture: energy contraction and output trace") {
  Scenario s;
  const ObserverFixtureResult res = run_observer_fixture(s, 5.0, 100, 1, 0.7);
  REQUIRE(res.error_energy.size() == 100);
  const double E0 = res.error_energy[0];
  for (size_t k = 1; k < res.error_energy.size(); ++k) {
    if (res.error_energy[k - 1] > 1e-18 * E0)
      CHECK(res.error_energy[k] <= 0.7 * res.error_energy[k - 1] * (1 + 1e-9));
  }
  CHECK(res.error_norm[60] < 1e-6 * res.error_norm[0]);
  // 5 N step drives the output up from rest
  CHECK(res.log.rows.back().y > 0.0);
}

TEST_CASE("switching robustness: boundary-crossing run stays bounded") {
  Scenario s;
  s.name = "switchy";
  s.profile = {3.5, 7.0, 5.0, {0.8, 0.8, 0.6}};
  s.tracking.kp = 0.15;
  const SimLog log = run_closed_loop(s);
  CHECK(log.region_switches >= 2);
  double xm_peak = 0.0, u_peak = 0.0;
  for (const auto& r : log.rows) {
    xm_peak = std::max(xm_peak, std::abs(r.x_m));
    u_peak = std::max(u_peak, std::abs(r.u));
  }
  CHECK(xm_peak < 0.10);  // an order above the workspace, i.e. no blowup
  CHECK(u_peak <= 10.0);
  CHECK(log.fallback_steps == 0);
}

TEST_CASE("printed-formulation closed loop also runs clean") {
  Scenario s = short_scenario();
  s.formulation = Formulation::PaperPrinted;
  const SimLog log = run_closed_loop(s);
  CHECK(log.fallback_steps == 0);
  for (const auto& r : log.rows) CHECK(std::abs(r.u) <= r.u_max + 1e-12);
}

TEST_CASE("perturbed true plant: deterministic per seed, still tracks") {
  Scenario s = short_scenario();
  s.plant.perturb = true;
  s.plant.factor = 0.10;
  s.seed = 5;
  const SimLog a = run_closed_loop(s);
  const SimLog b = run_closed_loop(s);
  CHECK(to_csv(a) == to_csv(b));
  s.seed = 6;
  const SimLog c = run_closed_loop(s);
  CHECK(to_csv(a) != to_csv(c));  // different perturbation draw
  double xm_peak = 0.0;
  for (const auto& r : a.rows) {
    CHECK(std::abs(r.u) <= r.u_max + 1e-12);
    xm_peak = std::max(xm_peak, std::abs(r.x_m));
  }
  CHECK(xm_peak < 0.05);  // bounded under the 10% mismatch
}

TEST_CASE("scenario hash distinguishes scenarios") {
  Scenario a = short_scenario();
  Scenario b = short_scenario();
  b.profile.peak1 = 1.6;
  CHECK(scenario_hash(a) != scenario_hash(b));
  Scenario c = short_scenario();
  c.seed = 99;
  CHECK(scenario_hash(a) != scenario_hash(c));
}
