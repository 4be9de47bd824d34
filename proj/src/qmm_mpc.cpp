#include "hmpc/qmm_mpc.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace hmpc {

MpcConfig MpcConfig::defaults(int n_aug, int nu) {
  MpcConfig c;
  c.Q = 1.5 * Mat::Identity(n_aug, n_aug);
  c.R = Mat::Identity(nu, nu);
  return c;
}

namespace {

Mat psd_sqrt(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(M));
  const Vec ev = es.eigenvalues().cwiseMax(0.0);
  return es.eigenvectors() * ev.cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

struct AugmentedVertex {
  Mat A;  // [[A, B], [0, I]]
  Mat B;  // [B; I]
};

AugmentedVertex augment(const VertexModel& v) {
  const int n = static_cast<int>(v.A.rows());
  const int nu = static_cast<int>(v.B.cols());
  AugmentedVertex a;
  a.A = Mat::Zero(n + nu, n + nu);
  a.A.topLeftCorner(n, n) = v.A;
  a.A.topRightCorner(n, nu) = v.B;
  a.A.bottomRightCorner(nu, nu) = Mat::Identity(nu, nu);
  a.B = Mat::Zero(n + nu, nu);
  a.B.topRows(n) = v.B;
  a.B.bottomRows(nu) = Mat::Identity(nu, nu);
  return a;
}

void add_sym_block(SdpProblem& p, LmiConstraint& c, int var, int n, int row0, int col0,
                   double coeff = 1.0) {
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) p.add_term(c, var, i, j, row0 + i, col0 + j, coeff);
}

}  // namespace

StepProblem build_step_problem(const StepInputs& in, const PolytopicModel& m,
                               const MpcConfig& c, const ObserverDesign& d) {
  const int n_aug = static_cast<int>(c.Q.rows());
  const int nu = static_cast<int>(c.R.rows());
  if (in.xi.z.size() != n_aug)
    throw std::invalid_argument("build_step_problem: augmented state dimension mismatch");
  if (in.vertex < 0 || in.vertex >= m.vertex_count())
    throw std::invalid_argument("build_step_problem: unknown vertex");
  if (m.state_dim() + nu != n_aug)
    throw std::invalid_argument("build_step_problem: Q order must be n_x + n_u");
  if (!(c.epsilon > 0) || !(c.u_max > 0))
    throw std::invalid_argument("build_step_problem: epsilon and u_max must be positive");

  const AugmentedVertex cur = augment(m.vertices[in.vertex]);
  const Mat Qh = psd_sqrt(c.Q);
  const Mat Rh = psd_sqrt(c.R);
  const Vec xi = in.xi.z;
  const Vec Axi = cur.A * xi;

  StepProblem sp;
  sp.n_aug = n_aug;
  sp.nu = nu;
  sp.u_prev = in.u_prev;
  sp.u_ss = in.u_ss;
  sp.u_max = c.u_max;
  sp.xi = xi;

  SdpProblem& p = sp.sdp;
  sp.v_du = p.add_full("du", nu, 1);
  sp.v_Y = p.add_full("Y", nu, n_aug);
  sp.v_Phi = p.add_symmetric("Phi", n_aug);
  sp.v_delta = p.add_scalar("delta");
  sp.v_Su = p.add_symmetric("Su", nu);
  p.set_objective_coeff(p.scalar_index(sp.v_delta), 1.0);

  // ---- first-step cost LMI ----
  {
    const int dim = 1 + n_aug + n_aug + nu;
    const int ci = p.add_constraint("first_step", dim);
    LmiConstraint& lc = p.constraint(ci);

    double eta = 1.0;
    Vec cost_row;        // constant part of the third block row
    Mat cost_row_du;     // du coefficient of the fourth block row
    if (c.formulation == Formulation::CanonicalQuasiMinMax) {
      cost_row = Qh * xi;
      cost_row_du = Rh;
    } else {
      // printed form: ((I+A)^T Q (I+A))^{1/2} x and (B^T Q B + R)^{1/2} du,
      // with the eta normalization of the innovation-plus-previous-input
      const Mat IA = Mat::Identity(n_aug, n_aug) + cur.A;
      cost_row = psd_sqrt(IA.transpose() * c.Q * IA) * xi;
      cost_row_du = psd_sqrt(cur.B.transpose() * c.Q * cur.B + c.R);
      const VertexModel& v = m.vertices[in.vertex];
      const double innov = in.y - (v.C * in.x_hat)(0, 0);
      Vec z(n_aug);
      z.head(m.state_dim()) = d.Lo * Vec::Constant(1, innov);
      z.tail(nu) = Vec::Constant(nu, in.u_prev);
      eta = 1.0 + z.dot(c.Q * z);
    }

    lc.constant_block(0, 0) = eta;
    for (int i = 0; i < n_aug; ++i) {
      lc.constant_block(1 + i, 0) = Axi(i);
      lc.constant_block(0, 1 + i) = Axi(i);
      lc.constant_block(1 + n_aug + i, 0) = cost_row(i);
      lc.constant_block(0, 1 + n_aug + i) = cost_row(i);
    }
    const double margin = strict_margin(lc.constant_block);
    lc.constant_block -= margin * Mat::Identity(dim, dim);

    for (int i = 0; i < n_aug; ++i) p.add_term(lc, sp.v_du, 0, 0, 1 + i, 0, cur.B(i, 0));
    add_sym_block(p, lc, sp.v_Phi, n_aug, 1, 1);
    for (int i = 0; i < n_aug; ++i)
      p.add_term(lc, sp.v_delta, 0, 0, 1 + n_aug + i, 1 + n_aug + i, 1.0);
    p.add_term(lc, sp.v_du, 0, 0, 1 + 2 * n_aug, 0, cost_row_du(0, 0));
    p.add_term(lc, sp.v_delta, 0, 0, 1 + 2 * n_aug, 1 + 2 * n_aug, 1.0);
  }

  // ---- contraction LMI per vertex ----
  for (int j = 0; j < m.vertex_count(); ++j) {
    const AugmentedVertex vj = augment(m.vertices[j]);
    const int dim = 3 * n_aug + nu;
    const int ci = p.add_constraint("contraction_" + std::to_string(j), dim);
    LmiConstraint& lc = p.constraint(ci);
    lc.constant_block -= 1e-8 * Mat::Identity(dim, dim);

    add_sym_block(p, lc, sp.v_Phi, n_aug, 0, 0);
    // S_j = A_j Phi + B_j Y at rows n_aug..2n_aug-1
    for (int r = 0; r < n_aug; ++r)
      for (int col = 0; col < n_aug; ++col) {
        for (int k = 0; k < n_aug; ++k)
          p.add_term(lc, sp.v_Phi, k, col, n_aug + r, col, vj.A(r, k));
        p.add_term(lc, sp.v_Y, 0, col, n_aug + r, col, vj.B(r, 0));
      }
    add_sym_block(p, lc, sp.v_Phi, n_aug, n_aug, n_aug);
    // Q^{1/2} Phi rows
    for (int r = 0; r < n_aug; ++r)
      for (int col = 0; col < n_aug; ++col)
        for (int k = 0; k < n_aug; ++k)
          p.add_term(lc, sp.v_Phi, k, col, 2 * n_aug + r, col, Qh(r, k));
    for (int i = 0; i < n_aug; ++i)
      p.add_term(lc, sp.v_delta, 0, 0, 2 * n_aug + i, 2 * n_aug + i, 1.0);
    // R^{1/2} Y row
    for (int col = 0; col < n_aug; ++col)
      p.add_term(lc, sp.v_Y, 0, col, 3 * n_aug, col, Rh(0, 0));
    p.add_term(lc, sp.v_delta, 0, 0, 3 * n_aug, 3 * n_aug, 1.0);
  }

  // ---- delta I - epsilon Phi >= 0 ----
  {
    const int ci = p.add_constraint("gamma_margin", n_aug);
    LmiConstraint& lc = p.constraint(ci);
    lc.constant_block -= 1e-8 * Mat::Identity(n_aug, n_aug);
    for (int i = 0; i < n_aug; ++i) p.add_term(lc, sp.v_delta, 0, 0, i, i, 1.0);
    add_sym_block(p, lc, sp.v_Phi, n_aug, 0, 0, -c.epsilon);
  }

  // ---- current input bound (2x2) on the absolute input u = u_prev + du ----
  {
    const int ci = p.add_constraint("current_input", 2);
    LmiConstraint& lc = p.constraint(ci);
    lc.constant_block << c.u_max, in.u_prev, in.u_prev, c.u_max;
    const double margin = strict_margin(lc.constant_block);
    lc.constant_block -= margin * Mat::Identity(2, 2);
    p.add_term(lc, sp.v_du, 0, 0, 1, 0, 1.0);
  }

  // ---- future input ellipsoid bound ----
  {
    const int dim = nu + n_aug;
    const int ci = p.add_constraint("future_input", dim);
    LmiConstraint& lc = p.constraint(ci);
    lc.constant_block -= 1e-8 * Mat::Identity(dim, dim);
    add_sym_block(p, lc, sp.v_Su, nu, 0, 0);
    for (int col = 0; col < n_aug; ++col) p.add_term(lc, sp.v_Y, 0, col, 0, nu + col, 1.0);
    add_sym_block(p, lc, sp.v_Phi, n_aug, nu, nu);
  }
  {
    const int ci = p.add_constraint("su_bound", 1);
    LmiConstraint& lc = p.constraint(ci);
    lc.constant_block(0, 0) = c.u_max * c.u_max;
    lc.constant_block(0, 0) -= strict_margin(lc.constant_block);
    p.add_term(lc, sp.v_Su, 0, 0, 0, 0, -1.0);
  }

  return sp;
}

MpcStepSolution solve_step(const StepProblem& p, const MpcStepSolution* previous,
                           const SdpOptions& opt) {
  MpcStepSolution out;
  SdpStatus status = SdpStatus::NumericalFailure;
  SdpSolution sol;
  SdpOptions o = opt;
  if (previous != nullptr && previous->feasible && previous->Phi.size() > 0) {
    // warm start near the previous certificate; du from the previous gain
    // (the same carry-over that guarantees recursive feasibility)
    Vec w = Vec::Zero(p.sdp.scalar_count());
    double du_w = (previous->Psi * p.xi)(0, 0);
    const double du_room = 0.98 * p.u_max;
    du_w = std::clamp(du_w, -du_room - (p.u_prev - p.u_ss), du_room - (p.u_prev - p.u_ss));
    w(p.sdp.scalar_index(p.v_du)) = du_w;
    for (int c = 0; c < p.n_aug; ++c) w(p.sdp.scalar_index(p.v_Y, 0, c)) = previous->Y(0, c);
    for (int i = 0; i < p.n_aug; ++i)
      for (int j = i; j < p.n_aug; ++j)
        w(p.sdp.scalar_index(p.v_Phi, i, j)) = previous->Phi(i, j);
    w(p.sdp.scalar_index(p.v_delta)) = std::max(5.0 * previous->delta, 1e-6);
    const double su_need =
        (previous->Y * previous->Phi.ldlt().solve(previous->Y.transpose()))(0, 0);
    w(p.sdp.scalar_index(p.v_Su)) = std::min(1.5 * su_need + 1e-9, 0.999 * p.u_max * p.u_max);
    o.warm_start = std::move(w);
  }
  try {
    sol = solve_sdp(p.sdp, o);
    status = sol.status;
  } catch (const std::exception&) {
    status = SdpStatus::NumericalFailure;
  }
  out.solver_status = status;

  if (status == SdpStatus::Optimal || status == SdpStatus::Feasible) {
    const double du = p.sdp.value_of(p.v_du, sol.x)(0, 0);
    out.Y = p.sdp.value_of(p.v_Y, sol.x);
    out.Phi = symmetrize(p.sdp.value_of(p.v_Phi, sol.x));
    out.delta = p.sdp.value_of(p.v_delta, sol.x)(0, 0);
    const Mat Phi_inv = out.Phi.ldlt().solve(Mat::Identity(p.n_aug, p.n_aug));
    out.Psi = out.Y * Phi_inv;
    out.Gamma = out.delta * Phi_inv;
    out.du_first = du;
    out.u_first = std::clamp(p.u_prev + du, -p.u_max, p.u_max);
    out.feasible = true;
    return out;
  }

  if (previous == nullptr || previous->Psi.size() == 0)
    throw FirstStepInfeasible("MPC step infeasible with no previous solution (status " +
                              std::string(to_string(status)) + ")");

  // fallback: reuse the previous feedback gain and certificate
  const double du = (previous->Psi * p.xi)(0, 0);
  out.Y = previous->Y;
  out.Phi = previous->Phi;
  out.Psi = previous->Psi;
  out.Gamma = previous->Gamma;
  out.delta = previous->delta;
  out.u_first = std::clamp(p.u_prev + du, -p.u_max, p.u_max);
  out.du_first = out.u_first - p.u_prev;
  out.feasible = false;
  return out;
}

double future_input(const Mat& Psi, const Vec& x_pred) {
  if (Psi.cols() != x_pred.size())
    throw std::invalid_argument("future_input: dimension mismatch");
  return (Psi * x_pred)(0);
}

RegulationShift tracking_to_regulation(const Vec& x_hat, double ref, double u_prev,
                                       const PolytopicModel& m, int vertex) {
  const VertexModel& v = m.vertices.at(vertex);
  const int n = static_cast<int>(v.A.rows());
  Mat S(n + 1, n + 1);
  S.topLeftCorner(n, n) = Mat::Identity(n, n) - v.A;
  S.topRightCorner(n, 1) = -v.B;
  S.bottomLeftCorner(1, n) = v.C;
  S(n, n) = 0.0;
  Vec rhs = Vec::Zero(n + 1);
  rhs(n) = ref;
  Eigen::FullPivLU<Mat> lu(S);
  if (!lu.isInvertible())
    throw std::runtime_error("tracking_to_regulation: singular target system (zero DC gain)");
  const Vec sol = lu.solve(rhs);

  RegulationShift out;
  out.x_ss = sol.head(n);
  out.u_ss = sol(n);
  out.xi.z = Vec(n + 1);
  out.xi.z.head(n) = x_hat - out.x_ss;
  out.xi.z(n) = u_prev - out.u_ss;
  return out;
}

}  // namespace hmpc
