#include "hmpc/observer.hpp"

#include <cmath>
#include <limits>

namespace hmpc {

namespace {

// Certificates at a near-critical decay rate exist only at large |P| with
// thin relative margins, so the synthesis maximizes the worst vertex-LMI
// margin over a scale-capped box instead of minimizing trace(P): the margin
// objective is aligned with the scale growth the certificate needs, which
// keeps the central path short and returns margins that mean something.
constexpr double kScaleCap = 1e9;

// Variables P (sym n), Y (n x ny), t; maximize t subject to
//   vertex blocks - t I >= 0,  P - t_floor I >= 0,  kScaleCap I - P >= 0.
SdpProblem synthesis_problem(const PolytopicModel& m, double rho, const Mat& Le) {
  const int n = m.state_dim();
  const int ny = static_cast<int>(m.vertices.at(0).C.rows());
  const double rho2 = rho * rho;

  SdpProblem p;
  const int vP = p.add_symmetric("P", n);
  const int vY = p.add_full("Y", n, ny);
  const int vt = p.add_scalar("margin");
  p.set_objective_coeff(p.scalar_index(vt), -1.0);  // maximize the margin

  for (int j = 0; j < m.vertex_count(); ++j) {
    const Mat& A = m.vertices[j].A;
    const Mat& C = m.vertices[j].C;
    const int ci = p.add_constraint("vertex_" + std::to_string(j), 2 * n);
    LmiConstraint& c = p.constraint(ci);
    c.constant_block.topLeftCorner(n, n) = -Le;
    for (int i = 0; i < 2 * n; ++i) p.add_term(c, vt, 0, 0, i, i, -1.0);
    // top-left: rho^2 P
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) p.add_term(c, vP, i, k, i, k, rho2);
    // bottom-right: P
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) p.add_term(c, vP, i, k, n + i, n + k, 1.0);
    // lower-left: P A - Y C (mirrored into the upper-right)
    for (int r = 0; r < n; ++r)
      for (int col = 0; col < n; ++col) {
        for (int k = 0; k < n; ++k) p.add_term(c, vP, r, k, n + r, col, A(k, col));
        for (int q = 0; q < ny; ++q) p.add_term(c, vY, r, q, n + r, col, -C(q, col));
      }
  }

  {
    const int ci = p.add_constraint("P_floor", n);
    LmiConstraint& c = p.constraint(ci);
    c.constant_block = -10.0 * Mat::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) p.add_term(c, vP, i, k, i, k, 1.0);
  }
  {
    const int ci = p.add_constraint("P_cap", n);
    LmiConstraint& c = p.constraint(ci);
    c.constant_block = kScaleCap * Mat::Identity(n, n);
    for (int i = 0; i < n; ++i)
      for (int k = i; k < n; ++k) p.add_term(c, vP, i, k, i, k, -1.0);
  }
  return p;
}

struct SynthesisAttempt {
  bool ok = false;
  Mat P, Y;
  double margin = 0.0;
};

SynthesisAttempt attempt(const PolytopicModel& m, double rho, const Mat& Le,
                         const SdpOptions& opt) {
  SynthesisAttempt r;
  SdpProblem p = synthesis_problem(m, rho, Le);
  SdpOptions o = opt;
  o.max_iterations = std::max(opt.max_iterations, 400);
  try {
    SdpSolution s = solve_sdp(p, o);
    if (s.status != SdpStatus::Optimal) return r;
    r.P = symmetrize(p.value_of(0, s.x));
    r.Y = p.value_of(1, s.x);
    r.margin = p.value_of(2, s.x)(0, 0);
    r.ok = r.margin >= strict_margin(Le);
  } catch (const std::exception&) {
    r.ok = false;
  }
  return r;
}

}  // namespace

ObserverDesign synthesize_observer(const PolytopicModel& m, double rho, const Mat& Le,
                                   const SdpOptions& opt) {
  if (!(rho > 0.0) || rho > 1.0)
    throw std::invalid_argument("synthesize_observer: rho must be in (0, 1]");
  const int n = m.state_dim();
  if (Le.rows() != n || Le.cols() != n || !is_symmetric(Le))
    throw std::invalid_argument("synthesize_observer: Le must be symmetric n x n");
  if (min_eig(Le) < -1e-12)
    throw std::invalid_argument("synthesize_observer: Le must be PSD");

  const SynthesisAttempt best = attempt(m, rho, Le, opt);
  if (!best.ok) {
    // diagnostic: bisect upward for the smallest feasible decay rate
    double lo = rho, hi = 1.0;
    double smallest = std::numeric_limits<double>::quiet_NaN();
    if (attempt(m, 1.0, Le, opt).ok) {
      for (int i = 0; i < 12; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (attempt(m, mid, Le, opt).ok)
          hi = mid;
        else
          lo = mid;
      }
      smallest = hi;
    }
    throw ObserverInfeasible(
        "observer synthesis infeasible at rho=" + std::to_string(rho) +
            (std::isnan(smallest) ? " (no feasible rho <= 1)"
                                  : " (smallest feasible rho ~ " + std::to_string(smallest) + ")"),
        smallest);
  }

  ObserverDesign d;
  d.rho = rho;
  d.Le = Le;
  d.Pe = best.P;
  d.Ye = best.Y;
  d.Lo = d.Pe.ldlt().solve(d.Ye);
  return d;
}

Mat observer_vertex_lmi(const VertexModel& v, const ObserverDesign& d) {
  const int n = static_cast<int>(d.Pe.rows());
  const Mat X = d.Pe * v.A - d.Ye * v.C;
  Mat M(2 * n, 2 * n);
  M.topLeftCorner(n, n) = d.rho * d.rho * d.Pe - d.Le;
  M.topRightCorner(n, n) = X.transpose();
  M.bottomLeftCorner(n, n) = X;
  M.bottomRightCorner(n, n) = d.Pe;
  return M;
}

EstimateState observer_step(const EstimateState& e, double u, double y,
                            const VertexModel& v, const ObserverDesign& d) {
  if (e.x_hat.size() != v.A.rows())
    throw std::invalid_argument("observer_step: dimension mismatch");
  EstimateState out;
  const double innov = y - (v.C * e.x_hat)(0, 0);
  out.x_hat = v.A * e.x_hat + v.B * Vec::Constant(1, u) + d.Lo * Vec::Constant(1, innov);
  return out;
}

}  // namespace hmpc
