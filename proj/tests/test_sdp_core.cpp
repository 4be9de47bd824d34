#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "hmpc/reference_data.hpp"
#include "hmpc/sdp_core.hpp"
#include "support/oracles.hpp"

#include <cmath>

using namespace hmpc;

TEST_CASE("min_eig identity and diagonal") {
  CHECK(min_eig(Mat::Identity(3, 3)) == doctest::Approx(1.0).epsilon(1e-12));
  Mat D = Mat::Zero(3, 3);
  D.diagonal() << 2.0, -5.0, 1.0;
  CHECK(min_eig(D) == doctest::Approx(-5.0).epsilon(1e-12));
}

TEST_CASE("min_eig rejects bad input") {
  Mat M = Mat::Zero(2, 2);
  M(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(min_eig(M), std::invalid_argument);
  Mat NS(2, 2);
  NS << 1.0, 2.0, 3.0, 4.0;  // not symmetric
  CHECK_THROWS_AS(min_eig(NS), std::invalid_argument);
}

TEST_CASE("min_eig of the published observer certificate is positive") {
  CHECK(min_eig(refdata::reference_Pe()) > 0.0);
}

TEST_CASE("min_eig invariant under symmetric permutation") {
  oracles::SplitMix64 rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    Mat M(4, 4);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j <= i; ++j) M(i, j) = M(j, i) = rng.uniform(-2.0, 2.0);
    std::array<int, 4> perm{0, 1, 2, 3};
    for (int i = 3; i > 0; --i) std::swap(perm[i], perm[rng.next() % (i + 1)]);
    Mat P = Mat::Zero(4, 4);
    for (int i = 0; i < 4; ++i) P(perm[i], i) = 1.0;
    const Mat Mp = P.transpose() * M * P;
    CHECK(min_eig(Mp) == doctest::Approx(min_eig(M)).epsilon(1e-12));
  }
}

TEST_CASE("zoh zero dynamics") {
  auto [Ad, Bd] = zoh_discretize(Mat::Zero(3, 3), Mat::Identity(3, 3), 0.005);
  CHECK((Ad - Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((Bd - 0.005 * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("zoh scalar closed form") {
  Mat A(1, 1), B(1, 1);
  A << -1.0;
  B << 1.0;
  auto [Ad, Bd] = zoh_discretize(A, B, 0.005);
  CHECK(Ad(0, 0) == doctest::Approx(std::exp(-0.005)).epsilon(1e-14));
  CHECK(Bd(0, 0) == doctest::Approx(1.0 - std::exp(-0.005)).epsilon(1e-12));
}

TEST_CASE("zoh exact for diagonalizable stable matrices") {
  oracles::SplitMix64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    // random stable 3x3 built from eigen-decomposition
    Mat V(3, 3);
    for (int i = 0; i < 9; ++i) V(i / 3, i % 3) = rng.uniform(-1.0, 1.0);
    if (std::abs(V.determinant()) < 1e-2) continue;
    Vec lam(3);
    for (int i = 0; i < 3; ++i) lam(i) = rng.uniform(-30.0, -0.5);
    const Mat A = V * lam.asDiagonal() * V.inverse();
    const double Ts = 0.005;
    auto [Ad, Bd] = zoh_discretize(A, Mat::Identity(3, 3).col(0), Ts);
    const Mat Ad_exact = V * (lam * Ts).array().exp().matrix().asDiagonal() * V.inverse();
    CHECK((Ad - Ad_exact).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("zoh semigroup property") {
  Mat A(3, 3);
  A << -38.0, -430.0, -1200.0, 1, 0, 0, 0, 1, 0;
  Mat B(3, 1);
  B << 1, 0, 0;
  auto [Ad, Bd] = zoh_discretize(A, B, 0.005);
  auto [Ah, Bh] = zoh_discretize(A, B, 0.0025);
  CHECK((Ah * Ah - Ad).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("zoh impulse response matches RK4 oracle") {
  // region-2 coupled model in companion form
  Mat A(3, 3);
  A << -44.0674157303, -560.7515785, -1655.9595506, 1, 0, 0, 0, 1, 0;
  Mat B(3, 1);
  B << 1, 0, 0;
  Mat C(1, 3);
  C << 0.0, 12.0554157303, 51.8013483146;
  const double Ts = 0.005;
  auto [Ad, Bd] = zoh_discretize(A, B, Ts);

  std::vector<double> pulse(20, 0.0);
  pulse[0] = 1.0;
  const auto states = oracles::rk4_zoh(A, B, Vec::Zero(3), pulse, Ts);

  Vec x = Vec::Zero(3);
  for (size_t k = 0; k < pulse.size(); ++k) {
    const double y_disc = (C * x)(0, 0);
    const double y_oracle = (C * states[k])(0, 0);
    CHECK(std::abs(y_disc - y_oracle) < 1e-8);
    x = Ad * x + Bd * pulse[k];
  }
}

TEST_CASE("zoh input validation") {
  CHECK_THROWS_AS(zoh_discretize(Mat::Zero(2, 3), Mat::Zero(2, 1), 0.01),
                  std::invalid_argument);
  CHECK_THROWS_AS(zoh_discretize(Mat::Zero(2, 2), Mat::Zero(2, 1), 0.0),
                  std::invalid_argument);
  Mat bad = Mat::Zero(2, 2);
  bad(0, 0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(zoh_discretize(bad, Mat::Zero(2, 1), 0.01), std::invalid_argument);
}

TEST_CASE("solve_sdp scalar bound: minimize d s.t. d >= 3") {
  SdpProblem p;
  const int d = p.add_scalar("delta");
  p.set_objective_coeff(p.scalar_index(d), 1.0);
  const int ci = p.add_constraint("bound", 1);
  auto& c = p.constraint(ci);
  c.constant_block(0, 0) = -3.0;
  p.add_term(c, d, 0, 0, 0, 0, 1.0);
  const SdpSolution s = solve_sdp(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(s.objective == doctest::Approx(3.0).epsilon(1e-5));
}

TEST_CASE("solve_sdp 2x2 PSD boundary: [x 1; 1 x] >= 0") {
  // feasibility: any x >= 1 accepted; minimizing x must land on the boundary
  SdpProblem p;
  const int xv = p.add_scalar("x");
  p.set_objective_coeff(p.scalar_index(xv), 1.0);
  const int ci = p.add_constraint("psd", 2);
  auto& c = p.constraint(ci);
  c.constant_block << 0.0, 1.0, 1.0, 0.0;
  p.add_term(c, xv, 0, 0, 0, 0, 1.0);
  p.add_term(c, xv, 0, 0, 1, 1, 1.0);
  const SdpSolution s = solve_sdp(p);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(s.x(0) >= 1.0 - 1e-6);
  CHECK(s.x(0) == doctest::Approx(1.0).epsilon(1e-4));
  // solution re-check contract
  CHECK(min_eig(p.constraints()[0].evaluate(s.x)) >= -1e-7);
}

TEST_CASE("solve_sdp detects infeasibility") {
  // x >= 1 and -x >= 1 simultaneously
  SdpProblem p;
  const int xv = p.add_scalar("x");
  p.set_objective_coeff(p.scalar_index(xv), 1.0);
  const int c1 = p.add_constraint("lo", 1);
  p.constraint(c1).constant_block(0, 0) = -1.0;
  p.add_term(p.constraint(c1), xv, 0, 0, 0, 0, 1.0);
  const int c2 = p.add_constraint("hi", 1);
  p.constraint(c2).constant_block(0, 0) = -1.0;
  p.add_term(p.constraint(c2), xv, 0, 0, 0, 0, -1.0);
  const SdpSolution s = solve_sdp(p);
  CHECK(s.status == SdpStatus::Infeasible);
  CHECK(s.infeasibility > 0.0);
}

TEST_CASE("solve_sdp dimension cap") {
  SdpProblem p;
  p.add_symmetric("big", 25);  // 325 scalars > 200
  p.add_constraint("c", 1);
  CHECK_THROWS_AS(solve_sdp(p), std::invalid_argument);
}

// Observer decay LMI on the published vertices at the published decay rate,
// posed as margin maximization over a scale-capped box (certificates at this
// near-critical rate only exist at large |P|). A positive margin establishes
// feasibility of the decay LMI; the synthesis module wraps this construction.
TEST_CASE("solve_sdp: decay-rate feasibility problem on published vertices") {
  const auto verts = refdata::reference_vertices();
  const double rho2 = refdata::reference_rho2();
  const int n = 3;

  SdpProblem p;
  const int vP = p.add_symmetric("P", n);
  const int vY = p.add_full("Y", n, 1);
  const int vt = p.add_scalar("t");
  p.set_objective_coeff(p.scalar_index(vt), -1.0);
  for (size_t j = 0; j < verts.size(); ++j) {
    const Mat& A = verts[j].A;
    const Mat& C = verts[j].C;
    const int ci = p.add_constraint("v" + std::to_string(j), 2 * n);
    auto& c = p.constraint(ci);
    c.constant_block.topLeftCorner(n, n) = -Mat::Identity(n, n);
    for (int i = 0; i < 2 * n; ++i) p.add_term(c, vt, 0, 0, i, i, -1.0);
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) {
        p.add_term(c, vP, i, k, i, k, rho2);
        p.add_term(c, vP, i, k, n + i, n + k, 1.0);
      }
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col) {
        for (int k = 0; k < n; ++k) p.add_term(c, vP, r, k, n + r, col, A(k, col));
        p.add_term(c, vY, r, 0, n + r, col, -C(0, col));
      }
  }
  {
    const int ci = p.add_constraint("floor", n);
    auto& c = p.constraint(ci);
    c.constant_block = -10.0 * Mat::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) p.add_term(c, vP, i, k, i, k, 1.0);
  }
  {
    const int ci = p.add_constraint("cap", n);
    auto& c = p.constraint(ci);
    c.constant_block = 1e9 * Mat::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) p.add_term(c, vP, i, k, i, k, -1.0);
  }
  SdpOptions o;
  o.max_iterations = 400;
  const SdpSolution s = solve_sdp(p, o);
  REQUIRE(s.status == SdpStatus::Optimal);
  CHECK(s.x(p.scalar_index(vt)) > 0.0);  // the decay LMI is strictly feasible
  // contract: every constraint PSD at the solution
  for (const auto& c : p.constraints()) CHECK(min_eig(c.evaluate(s.x)) >= -1e-7);
}

TEST_CASE("strict margin scales with the constant block") {
  CHECK(strict_margin(Mat::Zero(2, 2)) == doctest::Approx(1e-8));
  CHECK(strict_margin(100.0 * Mat::Identity(2, 2)) == doctest::Approx(1e-6));
}
