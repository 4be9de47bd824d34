#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hmpc/hand_ident.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace hmpc;

TEST_CASE("default hand values") {
  const HandParams h = default_hand();
  CHECK(h.m == 0.89);
  CHECK(h.k1 == 24.06);
  CHECK(h.k2 == 42.93);
  CHECK(h.b1 == 5.60);
  CHECK(h.b2 == 14.04);
  // derived sums: denominator 0.89 s^2 + 19.64 s + 66.99
  CHECK(h.b1 + h.b2 == doctest::Approx(19.64).epsilon(1e-12));
  CHECK(h.k1 + h.k2 == doctest::Approx(66.99).epsilon(1e-12));
  CHECK(h.k1 / (h.k1 + h.k2) == doctest::Approx(24.06 / 66.99).epsilon(1e-12));
}

TEST_CASE("hand <-> continuous coefficients round trip") {
  const HandParams h = default_hand();
  const HandCoeffs c = hand_to_coeffs(h);
  const HandParams back = coeffs_to_hand(c, h.m);
  CHECK(back.k1 == doctest::Approx(h.k1).epsilon(1e-12));
  CHECK(back.k2 == doctest::Approx(h.k2).epsilon(1e-12));
  CHECK(back.b1 == doctest::Approx(h.b1).epsilon(1e-12));
  CHECK(back.b2 == doctest::Approx(h.b2).epsilon(1e-12));
}

TEST_CASE("hand <-> discrete regressor model round trip") {
  const HandParams h = default_hand();
  const DiscreteHandModel d = hand_to_discrete_regressor_model(h, 0.005);
  const HandParams back = discrete_to_hand(d, h.m);
  CHECK(std::abs(back.k1 - h.k1) / h.k1 < 1e-6);
  CHECK(std::abs(back.k2 - h.k2) / h.k2 < 1e-6);
  CHECK(std::abs(back.b1 - h.b1) / h.b1 < 1e-6);
  CHECK(std::abs(back.b2 - h.b2) / h.b2 < 1e-6);
}

TEST_CASE("doubling stiffness and damping scales the numerator consistently") {
  HandParams h = default_hand();
  const HandCoeffs c1 = hand_to_coeffs(h);
  h.k1 *= 2;
  h.k2 *= 2;
  h.b1 *= 2;
  h.b2 *= 2;
  const HandCoeffs c2 = hand_to_coeffs(h);
  CHECK(c2.n1 == doctest::Approx(2 * c1.n1));
  CHECK(c2.n0 == doctest::Approx(2 * c1.n0));
  CHECK(c2.d1 == doctest::Approx(2 * c1.d1));
  CHECK(c2.d0 == doctest::Approx(2 * c1.d0));
}

TEST_CASE("large mass drives the velocity gain to zero") {
  HandParams h = default_hand();
  h.m = 1e9;
  const HandCoeffs c = hand_to_coeffs(h);
  CHECK(std::abs(c.n1) < 1e-8);
  CHECK(std::abs(c.n0) < 1e-7);
  const DiscreteHandModel d = hand_to_discrete_regressor_model(h, 0.005);
  CHECK(std::abs(d.b1) < 1e-9);
  CHECK(std::abs(d.b0) < 1e-9);
}

TEST_CASE("rls zero-innovation update keeps the estimate") {
  Vec theta0(3);
  theta0 << 1.0, -2.0, 0.5;
  RlsState s = rls_init(theta0, 100.0, 0.98);
  Vec phi(3);
  phi << 0.3, 1.1, -0.7;
  const double y = phi.dot(theta0);
  const RlsState s2 = rls_update(s, phi, y);
  CHECK((s2.theta - theta0).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rls dead-zone skips tiny regressors") {
  Vec theta0 = Vec::Zero(2);
  RlsState s = rls_init(theta0, 10.0, 0.98);
  Vec phi(2);
  phi << 1e-12, 1e-12;
  const RlsState s2 = rls_update(s, phi, 5.0);
  CHECK((s2.theta - theta0).cwiseAbs().maxCoeff() == 0.0);
  CHECK((s2.P - s.P).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("rls covariance stays SPD and converges on self-generated data") {
  // data from the known discrete hand model under persistent excitation
  const HandParams truth = default_hand();
  const DiscreteHandModel d = hand_to_discrete_regressor_model(truth, 0.005);

  Vec theta_true(4);
  theta_true << -d.a1, -d.a0, d.b1, d.b0;  // y = phi^T theta

  Vec theta0 = Vec::Zero(4);
  RlsState s = rls_init(theta0, 1e4, 0.98);

  double y1 = 0.0, y2 = 0.0, u1 = 0.0, u2 = 0.0;
  double min_eig_seen = 1e300;
  for (int k = 0; k < 2000; ++k) {
    const double t = 0.005 * k;
    const double u = std::sin(2.0 * M_PI * 1.3 * t) + std::sin(2.0 * M_PI * 0.47 * t + 0.3);
    Vec phi(4);
    phi << y1, y2, u1, u2;
    const double y = phi.dot(theta_true);
    s = rls_update(s, phi, y);
    Eigen::SelfAdjointEigenSolver<Mat> es(s.P, Eigen::EigenvaluesOnly);
    min_eig_seen = std::min(min_eig_seen, es.eigenvalues().minCoeff());
    y2 = y1;
    y1 = y;
    u2 = u1;
    u1 = u;
  }
  CHECK(min_eig_seen > 0.0);

  // recover physical parameters and compare within 2%
  DiscreteHandModel di;
  di.a1 = -s.theta(0);
  di.a0 = -s.theta(1);
  di.b1 = s.theta(2);
  di.b0 = s.theta(3);
  di.Ts = 0.005;
  const HandParams est = discrete_to_hand(di, truth.m);
  CHECK(std::abs(est.k1 - truth.k1) / truth.k1 < 0.02);
  CHECK(std::abs(est.k2 - truth.k2) / truth.k2 < 0.02);
  CHECK(std::abs(est.b1 - truth.b1) / truth.b1 < 0.02);
  CHECK(std::abs(est.b2 - truth.b2) / truth.b2 < 0.02);
}

TEST_CASE("rls with lambda = 1 on stationary data: covariance trace non-increasing") {
  Vec theta0 = Vec::Zero(3);
  RlsState s = rls_init(theta0, 50.0, 1.0);
  oracles::SplitMix64 rng(17);
  double prev_trace = s.P.trace();
  for (int k = 0; k < 500; ++k) {
    Vec phi(3);
    for (int i = 0; i < 3; ++i) phi(i) = rng.uniform(-1, 1);
    s = rls_update(s, phi, phi.sum());
    const double tr = s.P.trace();
    CHECK(tr <= prev_trace + 1e-12);
    prev_trace = tr;
  }
}

TEST_CASE("rls input validation") {
  RlsState s = rls_init(Vec::Zero(2), 1.0, 0.98);
  Vec phi(3);
  phi.setOnes();
  CHECK_THROWS_AS(rls_update(s, phi, 1.0), std::invalid_argument);
  Vec bad(2);
  bad << 1.0, std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(rls_update(s, bad, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(rls_init(Vec::Zero(2), 0.0, 0.98), std::invalid_argument);
  CHECK_THROWS_AS(rls_init(Vec::Zero(2), 1.0, 1.5), std::invalid_argument);
}
