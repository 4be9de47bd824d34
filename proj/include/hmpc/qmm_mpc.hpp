#pragma once

#include <optional>

#include "hmpc/model_lib.hpp"
#include "hmpc/observer.hpp"
#include "hmpc/sdp_core.hpp"

namespace hmpc {

enum class Formulation { PaperPrinted, CanonicalQuasiMinMax };

struct MpcConfig {
  Mat Q;                   // augmented-state weight (n_x + n_u square)
  Mat R;                   // input-increment weight
  double epsilon = 1e-3;   // Gamma > epsilon I margin
  double u_max = 10.0;     // current bound; the harness updates it per step
  Formulation formulation = Formulation::CanonicalQuasiMinMax;

  static MpcConfig defaults(int n_aug = 4, int nu = 1);
};

// Deviation state fed to the per-step problem: [x_hat - x_ss; u_prev - u_ss].
struct AugmentedState {
  Vec z;
};

struct MpcStepSolution {
  double u_first = 0.0;    // applied input (absolute, not deviation)
  double du_first = 0.0;   // input increment u(k) - u(k-1)
  Mat Y;                   // nu x n_aug
  Mat Phi;                 // n_aug, SPD at feasible steps
  double delta = 0.0;      // worst-case cost bound
  Mat Psi;                 // feedback gain Y Phi^{-1}
  Mat Gamma;               // delta Phi^{-1}
  bool feasible = false;   // solver path (false = fallback engaged)
  SdpStatus solver_status = SdpStatus::NumericalFailure;
};

struct StepInputs {
  AugmentedState xi;       // shifted augmented state
  int vertex = 0;          // current vertex, 0-based
  double u_prev = 0.0;     // previous applied input (absolute)
  double u_ss = 0.0;       // steady-state input of the tracking shift
  double u_max = 10.0;
  double y = 0.0;          // measured output (eta term, printed mode)
  Vec x_hat;               // raw state estimate (eta term, printed mode)
};

struct StepProblem {
  SdpProblem sdp;
  int v_du = 0, v_Y = 0, v_Phi = 0, v_delta = 0, v_Su = 0;
  int n_aug = 0, nu = 0;
  double u_prev = 0.0, u_ss = 0.0, u_max = 0.0;
  Vec xi;
};

StepProblem build_step_problem(const StepInputs& in, const PolytopicModel& m,
                               const MpcConfig& c, const ObserverDesign& d);

struct FirstStepInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Minimizes delta and extracts the step solution; on solver failure falls
// back to the previous feedback gain (throws FirstStepInfeasible when there
// is no previous solution to fall back to).
MpcStepSolution solve_step(const StepProblem& p, const MpcStepSolution* previous,
                           const SdpOptions& opt = {});

// Future control law u(k+i|k) = Psi x_p(k+i|k).
double future_input(const Mat& Psi, const Vec& x_pred);

struct RegulationShift {
  Vec x_ss;
  double u_ss = 0.0;
  AugmentedState xi;
};

// Steady-state pair for the current vertex: x_ss = A x_ss + B u_ss with
// C x_ss = ref, and the shifted deviation state. Throws when the vertex has
// zero DC gain (singular target system).
RegulationShift tracking_to_regulation(const Vec& x_hat, double ref, double u_prev,
                                       const PolytopicModel& m, int vertex);

}  // namespace hmpc
