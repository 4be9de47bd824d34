#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hmpc/hand_ident.hpp"
#include "hmpc/model_lib.hpp"
#include "hmpc/observer.hpp"
#include "hmpc/qmm_mpc.hpp"
#include "hmpc/tissue_env.hpp"

namespace hmpc {

// Operator force profile with the three-phase structure: linear rise with a
// slight puncture drop, nonlinear rise to the fracture peak with a sharp
// drop, then a cutting plateau.
struct ForceProfile {
  std::vector<double> samples;  // newtons at Ts
  double Ts = 0.005;
  std::array<double, 3> phase_ends{};  // seconds
};

ForceProfile synth_force_profile(double peak1, double fracture_peak, double cutting_level,
                                 std::array<double, 3> durations, double Ts = 0.005);

struct ProfileSpec {
  double peak1 = 2.0;
  double fracture_peak = 7.0;
  double cutting_level = 4.0;
  std::array<double, 3> durations{2.0, 4.0, 2.0};
};

struct ObserverSettings {
  // The published single-axis vertices admit a common certificate down to
  // rho^2 = 0.7; the tabulated-parameter build does not (its critical rate
  // is ~0.83), so scenarios default to 0.9 and the decay fixture runs on the
  // published vertices at 0.7.
  double rho2 = 0.9;       // decay rate squared
  double le_scale = 1.0;   // L_e = le_scale * I
};

struct TrackingSettings {
  double kp = 0.05;          // position-error fraction closed per step
  double v_ref_max = 0.25;   // m/s clamp on the velocity reference
  // Indentation-rate estimate: windowed backward difference + 1-pole filter.
  // A single-step difference at 200 Hz feeds back into the rate-dependent
  // inversion with loop gain > 1 and oscillates; the window keeps it stable.
  double v_est_cutoff_hz = 3.0;
  int v_est_window = 40;     // samples (0.2 s at the default rate)
};

struct IdentSettings {
  bool enabled = true;
  int refresh_steps = 50;
  double lambda = 0.98;
  double p0 = 1e4;
};

struct PlantSettings {
  bool perturb = false;
  double factor = 0.10;  // relative parameter perturbation of the true plant
};

struct Scenario {
  std::string name = "scenario";
  ProfileSpec profile;
  HandParams hand = default_hand();
  TissueParams tissue = default_tissue();
  double q_scale = 1.5;
  double r_scale = 1.0;
  double epsilon = 0.001;
  Formulation formulation = Formulation::CanonicalQuasiMinMax;
  bool u_bound_tissue = true;   // u_max = max(10 - F_s, floor) vs fixed 10 N
  double u_bound_floor = 0.5;
  ObserverSettings observer;
  TrackingSettings tracking;
  IdentSettings ident;
  PlantSettings plant;
  double Ts = 0.005;
  std::uint64_t seed = 1;
};

struct SimRow {
  double t = 0.0;
  int region = 2;
  Vec x_true;
  Vec x_hat;
  double y = 0.0;       // measured model output
  double y_hat = 0.0;   // estimated model output
  double x_m = 0.0;     // device displacement, m
  double x_ref = 0.0;   // reference displacement, m
  double force = 0.0;   // operator force, N
  double u = 0.0;
  double du = 0.0;
  double delta = 0.0;
  double u_max = 10.0;     // active input bound
  double v_next = 0.0;     // predicted-state ellipsoid value xi+^T Gamma xi+
  Vec psi;                 // feedback gain row of the step
  HandParams hand_est;     // controller-model hand parameters at this step
  bool feasible = true;
  int tissue_phase = 0;
  double impedance = 0.0;  // N/mm, NaN inside the dead-zone
};

struct SimLog {
  std::vector<SimRow> rows;
  ObserverDesign design;
  std::string scenario_name;
  std::uint64_t scenario_hash = 0;
  int fallback_steps = 0;
  int region_switches = 0;
};

SimLog run_closed_loop(const Scenario& s);

// Open-loop observer fixture: fixed vertex, constant force input, initial
// estimate offset; returns the per-step true/estimated states.
struct ObserverFixtureResult {
  SimLog log;
  std::vector<double> error_norm;       // ||e(k)||
  std::vector<double> error_energy;     // e^T P_e e
};

// Runs on the published reference vertices at rho^2 = fixture_rho2.
ObserverFixtureResult run_observer_fixture(const Scenario& s, double step_force = 5.0,
                                           int steps = 200, int fixed_vertex = 1,
                                           double fixture_rho2 = 0.7);

// 100 * rms(actual - reference) / range(reference)
double rmsd_percent(std::span<const double> actual, std::span<const double> reference);

// Pointwise F/x with a dead-zone below |x| = 0.05 mm encoded as nullopt.
std::vector<std::optional<double>> impedance_trace(std::span<const double> force_N,
                                                   std::span<const double> x_mm,
                                                   double deadzone_mm = 0.05);

// The three standard trials (low / medium / high indentation rate).
std::vector<Scenario> standard_scenarios();

std::uint64_t scenario_hash(const Scenario& s);

}  // namespace hmpc
