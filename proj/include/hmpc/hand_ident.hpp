#pragma once

#include "hmpc/sdp_core.hpp"

namespace hmpc {

// Five-parameter operator-arm impedance model.
struct HandParams {
  double m = 0.0;   // kg
  double k1 = 0.0;  // N/m
  double k2 = 0.0;  // N/m
  double b1 = 0.0;  // N.s/m
  double b2 = 0.0;  // N.s/m

  bool valid() const { return m > 0 && k1 > 0 && k2 > 0 && b1 > 0 && b2 > 0; }
};

// Published mean values, used as the identification prior.
HandParams default_hand();

// Continuous hand block  v_out/q = (n1 s + n0) / (s^2 + d1 s + d0),
// monic denominator (divided through by the mass).
struct HandCoeffs {
  double n1 = 0.0, n0 = 0.0, d1 = 0.0, d0 = 0.0;
};

HandCoeffs hand_to_coeffs(const HandParams& h);
// Inverse at a fixed mass. Throws if the coefficient set maps to
// non-positive physical parameters.
HandParams coeffs_to_hand(const HandCoeffs& c, double mass);

// ZOH-discretized hand block as ARX coefficients:
//   y(k) = -a1 y(k-1) - a0 y(k-2) + b1 u(k-1) + b0 u(k-2)
struct DiscreteHandModel {
  double a1 = 0.0, a0 = 0.0, b1 = 0.0, b0 = 0.0;
  double Ts = 0.0;
};

DiscreteHandModel hand_to_discrete_regressor_model(const HandParams& h, double Ts);
// Inverse map (principal matrix logarithm on the poles). Throws when the
// coefficients are not invertible (non-positive or aliased poles).
HandParams discrete_to_hand(const DiscreteHandModel& d, double mass);

// ---------------------------------------------------------------------------
// Normalized recursive least squares with forgetting factor.
// ---------------------------------------------------------------------------

struct RlsState {
  Vec theta;        // parameter estimate
  Mat P;            // covariance, kept symmetric positive definite
  double lambda = 0.98;
  double deadzone = 1e-9;  // regressor norm below which updates are skipped
};

RlsState rls_init(const Vec& theta0, double p0, double lambda = 0.98);
RlsState rls_update(const RlsState& s, const Vec& phi, double y);

}  // namespace hmpc
