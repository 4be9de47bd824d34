#include "hmpc/hand_ident.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

namespace hmpc {

HandParams default_hand() { return {0.89, 24.06, 42.93, 5.60, 14.04}; }

HandCoeffs hand_to_coeffs(const HandParams& h) {
  if (!h.valid()) throw std::invalid_argument("hand_to_coeffs: non-positive parameter");
  HandCoeffs c;
  c.n1 = h.b1 / h.m;
  c.n0 = h.k1 / h.m;
  c.d1 = (h.b1 + h.b2) / h.m;
  c.d0 = (h.k1 + h.k2) / h.m;
  return c;
}

HandParams coeffs_to_hand(const HandCoeffs& c, double mass) {
  if (!(mass > 0)) throw std::invalid_argument("coeffs_to_hand: mass must be positive");
  HandParams h;
  h.m = mass;
  h.b1 = mass * c.n1;
  h.k1 = mass * c.n0;
  h.b2 = mass * c.d1 - h.b1;
  h.k2 = mass * c.d0 - h.k1;
  if (!h.valid())
    throw std::invalid_argument("coeffs_to_hand: coefficients map outside the physical range");
  return h;
}

DiscreteHandModel hand_to_discrete_regressor_model(const HandParams& h, double Ts) {
  if (!(Ts > 0)) throw std::invalid_argument("hand_to_discrete: Ts must be positive");
  const HandCoeffs c = hand_to_coeffs(h);
  Mat Ac(2, 2), Bc(2, 1);
  Ac << -c.d1, -c.d0, 1.0, 0.0;
  Bc << 1.0, 0.0;
  auto [Ad, Bd] = zoh_discretize(Ac, Bc, Ts);
  Eigen::RowVector2d C(c.n1, c.n0);
  DiscreteHandModel d;
  d.Ts = Ts;
  d.a1 = -Ad.trace();
  d.a0 = Ad.determinant();
  // numerator of C (zI - Ad)^{-1} Bd for the 2x2 companion-free case:
  // C adj(zI - A) B = z (C B) + C (A - tr(A) I) B
  d.b1 = (C * Bd)(0, 0);
  d.b0 = (C * (Ad - Ad.trace() * Mat::Identity(2, 2)) * Bd)(0, 0);
  return d;
}

HandParams discrete_to_hand(const DiscreteHandModel& d, double mass) {
  if (!(d.Ts > 0)) throw std::invalid_argument("discrete_to_hand: bad Ts");
  // discrete poles -> continuous poles (principal log)
  const std::complex<double> disc(d.a1 * d.a1 / 4.0 - d.a0, 0.0);
  const std::complex<double> root = std::sqrt(disc);
  const std::complex<double> z1 = -d.a1 / 2.0 + root;
  const std::complex<double> z2 = -d.a1 / 2.0 - root;
  if (std::abs(z1) <= 0.0 || std::abs(z2) <= 0.0)
    throw std::invalid_argument("discrete_to_hand: pole at the origin is not invertible");
  const std::complex<double> s1 = std::log(z1) / d.Ts;
  const std::complex<double> s2 = std::log(z2) / d.Ts;
  const double d1 = -(s1 + s2).real();
  const double d0 = (s1 * s2).real();

  // with the denominator fixed, the numerator map (n1, n0) -> (b1, b0) is linear
  Mat Ac(2, 2), Bc(2, 1);
  Ac << -d1, -d0, 1.0, 0.0;
  Bc << 1.0, 0.0;
  auto [Ad, Bd] = zoh_discretize(Ac, Bc, d.Ts);
  const Mat M2 = (Ad - Ad.trace() * Mat::Identity(2, 2)) * Bd;
  Mat S(2, 2);
  S << Bd(0), Bd(1), M2(0), M2(1);
  Eigen::Vector2d rhs(d.b1, d.b0);
  Eigen::Vector2d n = S.fullPivLu().solve(rhs);
  if (!n.allFinite())
    throw std::invalid_argument("discrete_to_hand: numerator system is singular");
  return coeffs_to_hand({n(0), n(1), d1, d0}, mass);
}

RlsState rls_init(const Vec& theta0, double p0, double lambda) {
  if (!(p0 > 0) || !(lambda > 0) || lambda > 1.0)
    throw std::invalid_argument("rls_init: need p0 > 0 and lambda in (0, 1]");
  RlsState s;
  s.theta = theta0;
  s.P = p0 * Mat::Identity(theta0.size(), theta0.size());
  s.lambda = lambda;
  return s;
}

RlsState rls_update(const RlsState& s, const Vec& phi, double y) {
  if (phi.size() != s.theta.size())
    throw std::invalid_argument("rls_update: regressor dimension mismatch");
  if (!phi.allFinite() || !std::isfinite(y))
    throw std::invalid_argument("rls_update: non-finite input");
  if (phi.norm() < s.deadzone) return s;  // dead-zone: skip the update

  RlsState out = s;
  const Vec Pphi = s.P * phi;
  const double denom = s.lambda + phi.dot(Pphi);
  const Vec gain = Pphi / denom;
  const double innovation = y - phi.dot(s.theta);
  out.theta = s.theta + gain * innovation;
  out.P = (s.P - gain * Pphi.transpose()) / s.lambda;
  out.P = symmetrize(out.P);
  return out;
}

}  // namespace hmpc
