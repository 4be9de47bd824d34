#include "hmpc/tissue_env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hmpc {

double polyval(std::span<const double> c, double x) {
  double acc = 0.0;
  for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * x + *it;
  return acc;
}

bool TissueParams::valid() const {
  return K > 0 && B > 0 && !fs.empty() && fs[0] == 0.0 && !xf.empty() && !ff.empty() &&
         !a.empty() && force_scale > 0;
}

TissueParams default_tissue() {
  TissueParams p;
  p.fs = {0.0, 8.766, 2.087, 0.008};
  p.K = 63.62;
  p.B = 0.021;
  p.xf = {19.21, -0.0575, 0.0001};
  p.ff = {697.1, -1.176, 0.001};
  p.a = {-79.313, 0.0485, 0.0101, -7e-5, 1e-7};
  return p;
}

double loading_force(double x, double v, const TissueParams& p) {
  if (x < 0) throw std::invalid_argument("loading_force: negative indentation");
  if (v < 0) throw std::invalid_argument("loading_force: negative rate");
  const double fs = polyval(p.fs, x);
  if (v == 0.0 || x == 0.0) return fs;
  const double vt = v * p.tau();
  return fs + p.K * vt * (1.0 - std::exp(-x / vt));
}

double fracture_displacement(double v, const TissueParams& p) {
  if (v < 0) throw std::invalid_argument("fracture_displacement: negative rate");
  return std::max(0.0, polyval(p.xf, v));
}

double cutting_force(const TissueState& s, const TissueParams& p) {
  if (s.phase != TissuePhase::Cutting)
    throw std::logic_error("cutting_force: called in loading phase");
  const double v = p.live_rate_cutting ? s.v : s.v_at_fracture;
  return polyval(p.ff, v) + polyval(p.a, v) * (s.x - s.x_at_fracture);
}

double tissue_force(const TissueState& s, const TissueParams& p) {
  if (s.phase == TissuePhase::Cutting) return cutting_force(s, p);
  return loading_force(s.x, s.v, p);
}

namespace {

// Loading branch is strictly increasing in x for fixed v >= 0, so plain
// bisection suffices.
double invert_loading(double F, double v, double x_hi, const TissueParams& p) {
  double lo = 0.0, hi = x_hi;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (loading_force(mid, v, p) < F)
      lo = mid;
    else
      hi = mid;
    if (hi - lo < 1e-13 * std::max(1.0, x_hi)) break;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

InvertResult invert_force_to_reference(double F_meas, double v_est, TissueState& s,
                                       const TissueParams& p) {
  if (F_meas < 0) throw std::invalid_argument("invert: negative force");
  const double v = std::max(0.0, v_est);
  InvertResult r;

  if (s.phase == TissuePhase::Loading) {
    const double xf = fracture_displacement(v, p);
    const double F_at_xf = loading_force(xf, v, p);
    if (F_meas > F_at_xf) {
      // beyond the loading branch range: the tissue fractures
      s.phase = TissuePhase::Cutting;
      s.x_f_committed = xf;
      s.x_at_fracture = xf;
      s.v_at_fracture = v;
      r.fractured = true;
    } else {
      r.x_ref = (F_meas == 0.0) ? 0.0 : invert_loading(F_meas, v, xf, p);
      s.x = r.x_ref;
      s.v = v;
      return r;
    }
  }

  // cutting branch: affine, inverted in closed form
  const double vc = p.live_rate_cutting ? v : s.v_at_fracture;
  const double slope = polyval(p.a, vc);
  const double ff = polyval(p.ff, vc);
  double x = s.x_at_fracture;
  if (slope != 0.0) x = s.x_at_fracture + (F_meas - ff) / slope;
  if (x < s.x_at_fracture) {
    x = s.x_at_fracture;  // force above the branch range; pin to the fracture point
    r.clamped = true;
  }
  r.x_ref = x;
  s.x = x;
  s.v = v;
  return r;
}

}  // namespace hmpc
