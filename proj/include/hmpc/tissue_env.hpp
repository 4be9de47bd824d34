#pragma once

#include <span>
#include <vector>

namespace hmpc {

// Horner evaluation, coefficients in ascending powers.
double polyval(std::span<const double> ascending_coeffs, double x);

// Nonlinear indentation-rate-dependent tissue model. Displacements in mm,
// rates in mm/min, forces in the model's own unit (F_u); force_scale converts
// to newtons at the simulator boundary.
struct TissueParams {
  std::vector<double> fs;   // static force polynomial, fs[0] must be 0
  double K = 0.0;           // stiffness constant
  double B = 0.0;           // damping constant; relaxation time tau = B/K
  std::vector<double> xf;   // fracture displacement polynomial of the rate
  std::vector<double> ff;   // fracture force polynomial of the rate
  std::vector<double> a;    // cutting slope polynomial of the rate
  double force_scale = 0.01;    // newtons per F_u
  bool live_rate_cutting = false;  // use the live rate after fracture

  double tau() const { return B / K; }
  bool valid() const;
};

TissueParams default_tissue();

enum class TissuePhase { Loading, Cutting };

struct TissueState {
  double x = 0.0;               // indentation depth, mm
  double v = 0.0;               // indentation rate, mm/min
  TissuePhase phase = TissuePhase::Loading;
  double x_f_committed = 0.0;   // fracture displacement frozen at onset
  double x_at_fracture = 0.0;
  double v_at_fracture = 0.0;
};

// Loading branch F1 = Fs(x) + K v tau (1 - exp(-x/(v tau))); the rate term
// has the analytic limit 0 at v = 0.
double loading_force(double x, double v, const TissueParams& p);

// x_f(v), clamped below at zero.
double fracture_displacement(double v, const TissueParams& p);

// Cutting branch anchored at the fracture point: F2 = Ff(v) + a(v)(x - x_at_fracture).
double cutting_force(const TissueState& s, const TissueParams& p);

// Branch dispatch per the committed fracture displacement.
double tissue_force(const TissueState& s, const TissueParams& p);

struct InvertResult {
  double x_ref = 0.0;       // mm
  bool clamped = false;     // no root in range; boundary returned
  bool fractured = false;   // this call fired the loading->cutting transition
};

// Displacement at which the active branch produces F_meas (F_u units).
// Advances the phase machine: a force beyond the loading branch range at the
// committed fracture displacement triggers the cutting transition.
InvertResult invert_force_to_reference(double F_meas, double v_est, TissueState& s,
                                       const TissueParams& p);

}  // namespace hmpc
