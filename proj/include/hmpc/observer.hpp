#pragma once

#include <stdexcept>

#include "hmpc/model_lib.hpp"
#include "hmpc/sdp_core.hpp"

namespace hmpc {

// Robust polytopic observer: common quadratic certificate P_e with
//   [ rho^2 P - L_e   (P A_j - Y C_j)^T ]
//   [ P A_j - Y C_j          P          ]  >= gamma_strict I   for all vertices,
// gain L_o = P^{-1} Y.
struct ObserverDesign {
  double rho = 0.0;
  Mat Le;   // error weighting matrix
  Mat Pe;   // certificate, SPD
  Mat Ye;   // auxiliary variable
  Mat Lo;   // observer gain, n_x x n_y
};

struct ObserverInfeasible : std::runtime_error {
  ObserverInfeasible(const std::string& msg, double smallest_rho)
      : std::runtime_error(msg), smallest_feasible_rho(smallest_rho) {}
  double smallest_feasible_rho;  // NaN when none found up to rho = 1
};

ObserverDesign synthesize_observer(const PolytopicModel& m, double rho, const Mat& Le,
                                   const SdpOptions& opt = {});

// Evaluates the vertex decay LMI block at a given design (for residual checks).
Mat observer_vertex_lmi(const VertexModel& v, const ObserverDesign& d);

struct EstimateState {
  Vec x_hat;
};

// x_hat+ = A x_hat + B u + L_o (y - C x_hat)
EstimateState observer_step(const EstimateState& e, double u, double y,
                            const VertexModel& v, const ObserverDesign& d);

}  // namespace hmpc
