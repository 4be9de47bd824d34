#include "hmpc/sdp_core.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace hmpc {

namespace {

bool all_finite(const Mat& M) { return M.allFinite(); }

}  // namespace

double min_eig(const Mat& M) {
  if (M.rows() != M.cols() || M.rows() < 1)
    throw std::invalid_argument("min_eig: matrix must be square and non-empty");
  if (!all_finite(M)) throw std::invalid_argument("min_eig: non-finite entries");
  if (!is_symmetric(M))
    throw std::invalid_argument("min_eig: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(M), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_symmetric(const Mat& M, double rel_tol) {
  if (M.rows() != M.cols()) return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

std::pair<Mat, Mat> zoh_discretize(const Mat& Ac, const Mat& Bc, double Ts) {
  if (Ac.rows() != Ac.cols()) throw std::invalid_argument("zoh: A must be square");
  if (Bc.rows() != Ac.rows()) throw std::invalid_argument("zoh: B rows mismatch");
  if (!(Ts > 0.0)) throw std::invalid_argument("zoh: Ts must be positive");
  if (!all_finite(Ac) || !all_finite(Bc))
    throw std::invalid_argument("zoh: non-finite entries");
  const int n = static_cast<int>(Ac.rows());
  const int m = static_cast<int>(Bc.cols());
  Mat blk = Mat::Zero(n + m, n + m);
  blk.topLeftCorner(n, n) = Ac * Ts;
  blk.topRightCorner(n, m) = Bc * Ts;
  const Mat E = blk.exp();
  return {E.topLeftCorner(n, n), E.topRightCorner(n, m)};
}

double strict_margin(const Mat& constant_block) {
  const double mag = constant_block.size() ? constant_block.cwiseAbs().maxCoeff() : 0.0;
  return 1e-8 * std::max(mag, 1.0);
}

Mat LmiConstraint::evaluate(const Vec& x) const {
  Mat F = constant_block;
  for (const auto& t : terms) {
    const double v = t.coeff * x(t.scalar_index);
    F(t.row, t.col) += v;
    if (t.row != t.col) F(t.col, t.row) += v;
  }
  return F;
}

int SdpProblem::add_scalar(const std::string& id) {
  vars_.push_back({id, VarKind::Scalar, 1, 1, total_scalars_});
  total_scalars_ += 1;
  return static_cast<int>(vars_.size()) - 1;
}

int SdpProblem::add_full(const std::string& id, int rows, int cols) {
  vars_.push_back({id, VarKind::Full, rows, cols, total_scalars_});
  total_scalars_ += rows * cols;
  return static_cast<int>(vars_.size()) - 1;
}

int SdpProblem::add_symmetric(const std::string& id, int order) {
  vars_.push_back({id, VarKind::Symmetric, order, order, total_scalars_});
  total_scalars_ += order * (order + 1) / 2;
  return static_cast<int>(vars_.size()) - 1;
}

int SdpProblem::scalar_index(int v, int i, int j) const {
  const DecisionVar& d = vars_.at(v);
  switch (d.kind) {
    case VarKind::Scalar:
      return d.offset;
    case VarKind::Full:
      return d.offset + j * d.rows + i;
    case VarKind::Symmetric: {
      int r = std::max(i, j), c = std::min(i, j);
      // column-major lower triangle: offset of column c is sum of heights
      int col_base = c * d.rows - c * (c - 1) / 2;
      return d.offset + col_base + (r - c);
    }
  }
  throw std::logic_error("scalar_index: bad kind");
}

void SdpProblem::set_objective_coeff(int si, double c) {
  if (objective_.size() != total_scalars_) {
    Vec grown = Vec::Zero(total_scalars_);
    grown.head(objective_.size()) = objective_;
    objective_ = grown;
  }
  objective_(si) = c;
}

const Vec& SdpProblem::objective() const {
  if (objective_.size() != total_scalars_) {
    Vec grown = Vec::Zero(total_scalars_);
    grown.head(objective_.size()) = objective_;
    objective_ = grown;
  }
  return objective_;
}

int SdpProblem::add_constraint(const std::string& name, int dim) {
  LmiConstraint c;
  c.name = name;
  c.dim = dim;
  c.constant_block = Mat::Zero(dim, dim);
  constraints_.push_back(std::move(c));
  return static_cast<int>(constraints_.size()) - 1;
}

void SdpProblem::add_term(LmiConstraint& c, int v, int i, int j, int row, int col,
                          double coeff) {
  if (coeff == 0.0) return;
  c.terms.push_back({scalar_index(v, i, j), row, col, coeff});
}

Mat SdpProblem::value_of(int v, const Vec& x) const {
  const DecisionVar& d = vars_.at(v);
  Mat M(d.rows, d.cols);
  for (int j = 0; j < d.cols; ++j)
    for (int i = 0; i < d.rows; ++i) M(i, j) = x(scalar_index(v, i, j));
  return M;
}

// ---------------------------------------------------------------------------
// Barrier solver internals
// ---------------------------------------------------------------------------

namespace {

// Per-constraint structure: the dense derivative matrix dF/dx_l for each
// scalar that appears, plus the local <-> global index maps.
struct ConstraintCache {
  int dim = 0;
  Mat F0;
  std::vector<int> globals;           // global scalar ids present
  std::vector<Mat> dF;                // symmetric derivative per local id
};

struct BarrierState {
  std::vector<ConstraintCache> cache;
  int n = 0;           // scalar count
  int barrier_dim = 0; // sum of constraint dims
};

BarrierState build_cache(const SdpProblem& p, bool phase1, int t_index) {
  BarrierState st;
  st.n = p.scalar_count() + (phase1 ? 1 : 0);
  for (const auto& c : p.constraints()) {
    ConstraintCache cc;
    cc.dim = c.dim;
    cc.F0 = c.constant_block;
    std::vector<int> local_of(st.n, -1);
    for (const auto& t : c.terms) {
      int l = local_of[t.scalar_index];
      if (l < 0) {
        l = static_cast<int>(cc.globals.size());
        local_of[t.scalar_index] = l;
        cc.globals.push_back(t.scalar_index);
        cc.dF.emplace_back(Mat::Zero(c.dim, c.dim));
      }
      cc.dF[l](t.row, t.col) += t.coeff;
      if (t.row != t.col) cc.dF[l](t.col, t.row) += t.coeff;
    }
    if (phase1) {
      int l = static_cast<int>(cc.globals.size());
      cc.globals.push_back(t_index);
      cc.dF.emplace_back(Mat::Identity(c.dim, c.dim));
      (void)l;
    }
    st.barrier_dim += c.dim;
    st.cache.push_back(std::move(cc));
  }
  return st;
}

Mat eval_block(const ConstraintCache& cc, const Vec& x) {
  Mat F = cc.F0;
  for (size_t l = 0; l < cc.globals.size(); ++l) F += x(cc.globals[l]) * cc.dF[l];
  return F;
}

bool strictly_feasible(const BarrierState& st, const Vec& x) {
  for (const auto& cc : st.cache) {
    Mat F = eval_block(cc, x);
    Eigen::LLT<Mat> llt(F);
    if (llt.info() != Eigen::Success) return false;
  }
  return true;
}

// Barrier objective c^T x / mu - sum log det F_k(x); NaN outside the cone.
double barrier_value(const BarrierState& st, const Vec& c, double mu, const Vec& x) {
  double f = c.dot(x) / mu;
  for (const auto& cc : st.cache) {
    Mat F = eval_block(cc, x);
    Eigen::LLT<Mat> llt(F);
    if (llt.info() != Eigen::Success) return std::numeric_limits<double>::quiet_NaN();
    f -= 2.0 * Mat(llt.matrixL()).diagonal().array().log().sum();
  }
  return f;
}

enum class CenterOutcome { Converged, EarlyStop, Stalled, Budget, Failed };

// One centering run: damped Newton on c^T x / mu - sum log det F_k(x).
// early_stop, when given, aborts the run as soon as the predicate holds.
template <typename EarlyStop>
CenterOutcome newton_center(const BarrierState& st, const Vec& c, double mu, Vec& x,
                            int max_steps, int& used, double decrement_tol,
                            EarlyStop&& early_stop) {
  const int n = static_cast<int>(x.size());
  for (int it = 0; it < max_steps; ++it) {
    Vec g = c / mu;
    Mat H = Mat::Zero(n, n);
    for (const auto& cc : st.cache) {
      Mat F = eval_block(cc, x);
      Eigen::LLT<Mat> llt(F);
      if (llt.info() != Eigen::Success) return CenterOutcome::Failed;
      const int m = static_cast<int>(cc.globals.size());
      std::vector<Mat> G(m);
      for (int l = 0; l < m; ++l) G[l] = llt.solve(cc.dF[l]);
      for (int l = 0; l < m; ++l) {
        g(cc.globals[l]) -= G[l].trace();
        for (int r = l; r < m; ++r) {
          const double h = (G[l].array() * G[r].transpose().array()).sum();
          H(cc.globals[l], cc.globals[r]) += h;
          if (r != l) H(cc.globals[r], cc.globals[l]) += h;
        }
      }
    }
    // regularized Newton direction
    const double diag_scale = std::max(H.diagonal().cwiseAbs().maxCoeff(), 1e-12);
    Vec dx = Vec::Zero(n);
    double reg = 1e-11 * diag_scale;
    bool have_dir = false;
    for (int attempt = 0; attempt < 10; ++attempt) {
      const Mat Hr = H + reg * Mat::Identity(n, n);
      Eigen::LDLT<Mat> ldlt(Hr);
      const Vec cand = ldlt.solve(-g);
      if (ldlt.info() == Eigen::Success && cand.allFinite() && g.dot(cand) < 0.0) {
        dx = cand;
        have_dir = true;
        break;
      }
      reg *= 100.0;
    }
    if (!have_dir) return CenterOutcome::Failed;

    // trust cap against degenerate directions
    const double cap = 1e5 * (1.0 + x.norm());
    if (dx.norm() > cap) dx *= cap / dx.norm();

    const double lambda2 = -g.dot(dx);
    ++used;
    if (lambda2 * 0.5 <= decrement_tol) return CenterOutcome::Converged;

    const double lambda = std::sqrt(std::max(lambda2, 0.0));
    double alpha = (lambda <= 0.25) ? 1.0 : 1.0 / (1.0 + lambda);
    const double f0 = barrier_value(st, c, mu, x);
    bool moved = false;
    for (int ls = 0; ls < 60; ++ls) {
      const Vec xn = x + alpha * dx;
      const double fn = barrier_value(st, c, mu, xn);
      if (std::isfinite(fn) && fn <= f0 - 1e-4 * alpha * lambda2) {
        x = xn;
        moved = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!moved) return CenterOutcome::Stalled;
    if (early_stop(x)) return CenterOutcome::EarlyStop;
  }
  return CenterOutcome::Budget;
}

double worst_violation(const SdpProblem& p, const Vec& x) {
  double w = std::numeric_limits<double>::infinity();
  for (const auto& c : p.constraints()) w = std::min(w, min_eig(c.evaluate(x)));
  return w;
}

}  // namespace

const char* to_string(SdpStatus s) {
  switch (s) {
    case SdpStatus::Optimal: return "optimal";
    case SdpStatus::Feasible: return "feasible";
    case SdpStatus::Infeasible: return "infeasible";
    case SdpStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

SdpSolution solve_sdp(const SdpProblem& p, const SdpOptions& opt) {
  SdpSolution sol;
  const int n = p.scalar_count();
  if (n > opt.dimension_cap)
    throw std::invalid_argument("solve_sdp: decision dimension exceeds cap");
  if (p.constraints().empty())
    throw std::invalid_argument("solve_sdp: no constraints");
  for (const auto& c : p.constraints()) {
    if (!all_finite(c.constant_block))
      throw std::invalid_argument("solve_sdp: non-finite constraint data");
    for (const auto& t : c.terms)
      if (!std::isfinite(t.coeff) || t.scalar_index < 0 || t.scalar_index >= n)
        throw std::invalid_argument("solve_sdp: bad constraint term");
  }

  const Vec& cobj = p.objective();
  const bool has_objective = cobj.cwiseAbs().maxCoeff() > 0.0;

  if (opt.warm_start.size() == n && opt.warm_start.allFinite()) {
    BarrierState stw = build_cache(p, false, -1);
    if (strictly_feasible(stw, opt.warm_start)) {
      Vec x = opt.warm_start;
      if (has_objective) {
        auto never = [](const Vec&) { return false; };
        double mu = 1e-4 * std::max(1.0, std::abs(cobj.dot(x)));
        int used2 = 0;
        bool converged = false;
        while (used2 < opt.max_iterations) {
          const int steps = std::min(40, opt.max_iterations - used2);
          const double gap = stw.barrier_dim * mu;
          const bool last_stage = gap < opt.tol_obj * std::max(1.0, std::abs(cobj.dot(x)));
          const CenterOutcome oc = newton_center(stw, cobj, mu, x, steps, used2,
                                                 last_stage ? 1e-10 : 1e-3, never);
          if (opt.trace)
            std::fprintf(stderr, "[sdp warm] mu=%.3e obj=%.9e used=%d oc=%d\n", mu,
                         cobj.dot(x), used2, static_cast<int>(oc));
          if (oc == CenterOutcome::Failed) break;
          if (last_stage) { converged = true; break; }
          if (oc == CenterOutcome::Stalled && gap < 1e4 * opt.tol_obj) { converged = true; break; }
          mu *= 0.07;
        }
        sol.newton_iterations = used2;
        if (converged) {
          sol.x = x;
          sol.objective = cobj.dot(x);
          sol.worst_violation = worst_violation(p, x);
          if (sol.worst_violation >= -opt.tol_psd) {
            sol.status = SdpStatus::Optimal;
            return sol;
          }
        }
        // fall through to the cold path on any trouble
      } else {
        sol.x = x;
        sol.objective = 0.0;
        sol.worst_violation = worst_violation(p, x);
        if (sol.worst_violation >= -opt.tol_psd) {
          sol.status = SdpStatus::Feasible;
          return sol;
        }
      }
    }
  }

  // ---- Phase I: minimize t subject to F_k(x) + t I >= 0, t >= -1 ----
  const int t_index = n;
  BarrierState st1 = build_cache(p, true, t_index);
  {
    // keeps the phase-I problem bounded below
    ConstraintCache floor_c;
    floor_c.dim = 1;
    floor_c.F0 = Mat::Constant(1, 1, 1.0);
    floor_c.globals = {t_index};
    floor_c.dF = {Mat::Constant(1, 1, 1.0)};
    st1.cache.push_back(std::move(floor_c));
    st1.barrier_dim += 1;
  }
  Vec x1 = Vec::Zero(n + 1);
  {
    double worst = 0.0;
    for (const auto& c : p.constraints()) {
      Eigen::SelfAdjointEigenSolver<Mat> es(symmetrize(c.constant_block),
                                            Eigen::EigenvaluesOnly);
      worst = std::min(worst, es.eigenvalues().minCoeff());
    }
    x1(t_index) = -worst + 1.0;
  }
  Vec c1 = Vec::Zero(n + 1);
  c1(t_index) = 1.0;

  int used = 0;
  const double t0 = x1(t_index);
  const double p1_target = -0.05 * std::max(1.0, t0);
  auto t_negative = [&](const Vec& xx) { return xx(t_index) < p1_target; };
  double mu = std::max(1.0, t0);
  bool p1_done = false;   // mu ladder converged
  bool p1_failed = false;
  const int stage_cap = 40;
  while (used < opt.max_iterations && !t_negative(x1)) {
    const int steps = std::min(stage_cap, opt.max_iterations - used);
    const double gap = st1.barrier_dim * mu;
    const bool last_stage = gap < 1e-8 * std::max(1.0, std::abs(x1(t_index)));
    const CenterOutcome oc = newton_center(st1, c1, mu, x1, steps, used,
                                           last_stage ? 1e-12 : 1e-3, t_negative);
    if (opt.trace)
      std::fprintf(stderr, "[sdp p1] mu=%.3e t=%.6e used=%d oc=%d\n", mu, x1(t_index), used,
                   static_cast<int>(oc));
    if (oc == CenterOutcome::Failed) {
      p1_failed = true;
      break;
    }
    if (oc == CenterOutcome::EarlyStop) break;
    if (last_stage && (oc == CenterOutcome::Converged || oc == CenterOutcome::Stalled)) {
      p1_done = true;
      break;
    }
    if (oc == CenterOutcome::Stalled && gap < 1e-4) {
      p1_done = true;  // centered as far as arithmetic allows
      break;
    }
    mu *= 0.1;
  }
  sol.newton_iterations = used;

  if (!t_negative(x1)) {
    if (p1_failed) {
      sol.status = SdpStatus::NumericalFailure;
    } else if (p1_done && x1(t_index) > 1e-7) {
      sol.status = SdpStatus::Infeasible;
      sol.infeasibility = x1(t_index);
    } else {
      sol.status = SdpStatus::NumericalFailure;  // undecided
      sol.infeasibility = std::max(0.0, x1(t_index));
    }
    sol.x = x1.head(n);
    return sol;
  }

  Vec x = x1.head(n);

  // ---- Phase II: follow the central path on the true objective ----
  if (has_objective) {
    BarrierState st2 = build_cache(p, false, -1);
    if (!strictly_feasible(st2, x)) {
      sol.status = SdpStatus::NumericalFailure;
      sol.x = x;
      return sol;
    }
    auto never = [](const Vec&) { return false; };
    int used2 = 0;
    mu = std::max(1.0, std::abs(cobj.dot(x))) / std::max(1, st2.barrier_dim);
    bool converged = false;
    while (used2 < opt.max_iterations) {
      const int steps = std::min(stage_cap, opt.max_iterations - used2);
      const double gap = st2.barrier_dim * mu;
      const bool last_stage = gap < opt.tol_obj * std::max(1.0, std::abs(cobj.dot(x)));
      const CenterOutcome oc = newton_center(st2, cobj, mu, x, steps, used2,
                                             last_stage ? 1e-10 : 1e-3, never);
      if (opt.trace)
        std::fprintf(stderr, "[sdp p2] mu=%.3e obj=%.9e used=%d oc=%d\n", mu, cobj.dot(x),
                     used2, static_cast<int>(oc));
      if (oc == CenterOutcome::Failed) break;
      if (last_stage) {
        converged = true;  // duality gap at target; centering residual is secondary
        break;
      }
      if (oc == CenterOutcome::Stalled && gap < 1e4 * opt.tol_obj) {
        converged = true;  // arithmetic floor near the optimum
        break;
      }
      mu *= 0.07;
    }
    sol.newton_iterations += used2;
    if (!converged) {
      sol.status = SdpStatus::NumericalFailure;
      sol.x = x;
      return sol;
    }
  }

  sol.x = x;
  sol.objective = cobj.dot(x);
  sol.worst_violation = worst_violation(p, x);
  if (sol.worst_violation < -opt.tol_psd) {
    sol.status = SdpStatus::NumericalFailure;  // never report a violating point
    return sol;
  }
  sol.status = has_objective ? SdpStatus::Optimal : SdpStatus::Feasible;
  return sol;
}

}  // namespace hmpc
