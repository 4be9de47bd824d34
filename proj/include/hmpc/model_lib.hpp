#pragma once

#include <array>
#include <vector>

#include "hmpc/hand_ident.hpp"
#include "hmpc/sdp_core.hpp"

namespace hmpc {

// One piecewise-linear region of the single-axis device dynamics
// x'' + a x' = b F.
struct DeviceRegionParams {
  int index = 0;  // 1..3
  double a = 0.0; // 1/s
  double b = 0.0; // gain
};

// Region gains with thresholds at +/-10 mm on the end-effector displacement.
std::array<DeviceRegionParams, 3> device_regions();

// Region rule: 1 for x < -10 mm, 2 for |x| <= 10 mm, 3 for x > 10 mm.
int region_of(double x_m);

struct ContinuousVertex {
  Mat A, B, C;  // velocity-output realization, cascade coordinates
};

// Third-order coupled device+arm model in the velocity form
//   v/F = b_i/(s+a_i) * (b1 s + k1)/(m s^2 + (b1+b2) s + (k1+k2)),
// realized as the device velocity state feeding the arm's phase pair.
// Requires positive mass, device gains and total stiffness; b1 = k1 = 0 is
// accepted and yields a zero transfer.
ContinuousVertex coupled_vertex(const HandParams& hand, const DeviceRegionParams& dev);

struct VertexModel {
  Mat A, B, C;    // discrete at Ts, C is the velocity row
  Mat Ac, Bc;     // continuous realization (empty for raw fixture models)

  // Exact ZOH bookkeeping for the end-effector displacement:
  //   x_m(k+1) = x_m(k) + disp_row * x(k) + disp_gain * u(k)
  Eigen::RowVectorXd disp_row;
  double disp_gain = 0.0;
  bool has_displacement = false;

  double spectral_radius() const;
};

struct PolytopicModel {
  std::vector<VertexModel> vertices;
  double Ts = 0.0;

  int vertex_count() const { return static_cast<int>(vertices.size()); }
  // 0-based active vertex from measured displacement; total on finite inputs.
  int active_vertex(double x_m) const;

  int state_dim() const { return static_cast<int>(vertices.at(0).A.rows()); }
  int input_dim() const { return static_cast<int>(vertices.at(0).B.cols()); }
};

// Three-vertex polytopic model from the device regions, or a degenerate
// single-region model when one region is supplied.
PolytopicModel build_polytopic(const HandParams& hand, double Ts);
PolytopicModel build_polytopic(const HandParams& hand, double Ts,
                               const std::vector<DeviceRegionParams>& regions);

// Wraps externally given discrete vertices (e.g. published fixture matrices).
PolytopicModel make_polytopic(std::vector<VertexModel> vertices, double Ts);
VertexModel make_vertex(const Mat& A, const Mat& B, const Mat& C);

struct PlantState {
  Vec x;            // realization state
  double x_m = 0.0; // end-effector displacement, meters
};

PlantState make_plant_state(int n);

// x+ = A(p) x + B(p) u with p from the current displacement; the displacement
// itself advances through the exact ZOH integral of the velocity output.
PlantState step_plant(const PlantState& s, double u, const PolytopicModel& m);

// Measured (velocity) output of the active vertex.
double plant_output(const PlantState& s, const PolytopicModel& m);

}  // namespace hmpc
