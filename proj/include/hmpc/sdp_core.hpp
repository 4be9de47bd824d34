#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hmpc {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Smallest eigenvalue of a symmetric matrix. Throws on non-finite entries
// or asymmetry beyond a relative slack.
double min_eig(const Mat& M);

bool is_symmetric(const Mat& M, double rel_tol = 1e-9);

inline Mat symmetrize(const Mat& M) { return 0.5 * (M + M.transpose()); }

// Exact zero-order-hold discretization via the matrix exponential of the
// augmented block [[A, B], [0, 0]] * Ts.
std::pair<Mat, Mat> zoh_discretize(const Mat& Ac, const Mat& Bc, double Ts);

// ---------------------------------------------------------------------------
// Small dense SDP in LMI (dual) form:
//   minimize c^T x   s.t.   F_k(x) = F0_k + sum_l x_l * Fl_k  >= 0   for all k
// Strict inequalities are encoded by folding a margin into F0 (see
// strict_margin). Decision variables are scalars, full matrices or symmetric
// matrices, flattened into the scalar vector x.
// ---------------------------------------------------------------------------

enum class VarKind { Scalar, Full, Symmetric };

struct DecisionVar {
  std::string id;
  VarKind kind = VarKind::Scalar;
  int rows = 1;
  int cols = 1;
  int offset = 0;  // first scalar index

  int scalar_count() const {
    if (kind == VarKind::Scalar) return 1;
    if (kind == VarKind::Full) return rows * cols;
    return rows * (rows + 1) / 2;  // lower triangle, column major
  }
};

// One scalar decision entry contributing coeff to entry (row, col) of the
// constraint matrix. Off-diagonal contributions are mirrored at evaluation,
// so a term at (r, c), r != c, adds coeff at both (r, c) and (c, r).
struct LmiTerm {
  int scalar_index = 0;
  int row = 0;
  int col = 0;
  double coeff = 0.0;
};

struct LmiConstraint {
  std::string name;
  int dim = 0;
  Mat constant_block;           // F0 (margin already subtracted if strict)
  std::vector<LmiTerm> terms;

  Mat evaluate(const Vec& x) const;
};

// Margin used to represent a strict inequality M > 0 as M >= margin * I:
// 1e-8 scaled by the largest magnitude in the constant block.
double strict_margin(const Mat& constant_block);

struct SdpOptions {
  double tol_psd = 1e-7;    // accepted constraint violation at the solution
  double tol_obj = 1e-6;    // relative objective gap target
  double tol_eig = 1e-10;   // eigenvalue accuracy contract for min_eig
  int max_iterations = 200; // Newton iteration budget per phase
  int dimension_cap = 200;  // total scalar decision variables
  bool trace = false;       // dump path-following progress to stderr
  Vec warm_start;           // optional initial point; used when strictly feasible
};

enum class SdpStatus { Optimal, Feasible, Infeasible, NumericalFailure };

const char* to_string(SdpStatus s);

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalFailure;
  Vec x;
  double objective = 0.0;
  double worst_violation = 0.0;    // min over constraints of min_eig(F_k(x))
  double infeasibility = 0.0;      // phase-I measure when status == Infeasible
  int newton_iterations = 0;
};

class SdpProblem {
 public:
  int add_scalar(const std::string& id);
  int add_full(const std::string& id, int rows, int cols);
  int add_symmetric(const std::string& id, int order);

  const DecisionVar& var(int v) const { return vars_.at(v); }
  int var_count() const { return static_cast<int>(vars_.size()); }
  int scalar_count() const { return total_scalars_; }

  // Scalar index of entry (i, j) of variable v. Symmetric variables map
  // (i, j) and (j, i) to the same index.
  int scalar_index(int v, int i = 0, int j = 0) const;

  void set_objective_coeff(int scalar_index, double c);
  const Vec& objective() const;

  int add_constraint(const std::string& name, int dim);
  LmiConstraint& constraint(int c) { return constraints_.at(c); }
  const std::vector<LmiConstraint>& constraints() const { return constraints_; }

  // Convenience for constraint assembly: adds coeff * var(v)(i,j) to entry
  // (row, col) of constraint block c (mirrored when row != col).
  void add_term(LmiConstraint& c, int v, int i, int j, int row, int col, double coeff);

  Mat value_of(int v, const Vec& x) const;

 private:
  std::vector<DecisionVar> vars_;
  std::vector<LmiConstraint> constraints_;
  mutable Vec objective_;
  int total_scalars_ = 0;
};

// Barrier interior-point solve. Phase I finds a strictly feasible point or an
// infeasibility measure; phase II follows the central path on the linear
// objective. A solution is only reported Optimal/Feasible after re-checking
// every constraint at the returned point.
SdpSolution solve_sdp(const SdpProblem& p, const SdpOptions& opt = {});

}  // namespace hmpc
