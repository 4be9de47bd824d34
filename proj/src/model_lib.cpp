#include "hmpc/model_lib.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <stdexcept>

namespace hmpc {

std::array<DeviceRegionParams, 3> device_regions() {
  return {{{1, 16.2, 2.02}, {2, 22.0, 1.916}, {3, 37.1, 1.289}}};
}

int region_of(double x_m) {
  if (!std::isfinite(x_m)) throw std::invalid_argument("region_of: non-finite displacement");
  if (x_m < -0.010) return 1;
  if (x_m > 0.010) return 3;
  return 2;
}

ContinuousVertex coupled_vertex(const HandParams& hand, const DeviceRegionParams& dev) {
  if (!(hand.m > 0)) throw std::invalid_argument("coupled_vertex: mass must be positive");
  if (!(hand.k1 + hand.k2 > 0))
    throw std::invalid_argument("coupled_vertex: total stiffness must be positive");
  if (hand.k1 < 0 || hand.k2 < 0 || hand.b1 < 0 || hand.b2 < 0)
    throw std::invalid_argument("coupled_vertex: negative hand parameter");
  if (!(dev.a > 0) || !(dev.b > 0))
    throw std::invalid_argument("coupled_vertex: device parameters must be positive");

  // cascade realization: x1 device velocity state, (x2, x3) hand phase pair.
  // Only A(0,0) and B(0) vary across regions, which keeps the polytope tight
  // for the common-certificate observer synthesis.
  ContinuousVertex v;
  v.A = Mat(3, 3);
  v.A << -dev.a, 0.0, 0.0,
          0.0, 0.0, 1.0,
          1.0 / hand.m, -(hand.k1 + hand.k2) / hand.m, -(hand.b1 + hand.b2) / hand.m;
  v.B = Mat(3, 1);
  v.B << dev.b, 0.0, 0.0;
  v.C = Mat(1, 3);
  v.C << 0.0, hand.k1, hand.b1;
  return v;
}

double VertexModel::spectral_radius() const {
  return A.eigenvalues().cwiseAbs().maxCoeff();
}

int PolytopicModel::active_vertex(double x_m) const {
  if (vertices.size() == 1) return 0;
  return region_of(x_m) - 1;
}

namespace {

VertexModel discretize_vertex(const ContinuousVertex& cv, double Ts) {
  VertexModel v;
  auto [Ad, Bd] = zoh_discretize(cv.A, cv.B, Ts);
  v.A = Ad;
  v.B = Bd;
  v.C = cv.C;
  v.Ac = cv.A;
  v.Bc = cv.B;
  // x_m(k+1) - x_m(k) = C int_0^Ts x dt = C A^-1 ((Ad - I) x + (Bd - Ts B) u)
  const Mat Ainv_rows = cv.C * cv.A.inverse();
  v.disp_row = (Ainv_rows * (Ad - Mat::Identity(3, 3))).row(0);
  v.disp_gain = (Ainv_rows * (Bd - Ts * cv.B))(0, 0);
  v.has_displacement = true;
  return v;
}

}  // namespace

PolytopicModel build_polytopic(const HandParams& hand, double Ts) {
  const auto regs = device_regions();
  return build_polytopic(hand, Ts, {regs.begin(), regs.end()});
}

PolytopicModel build_polytopic(const HandParams& hand, double Ts,
                               const std::vector<DeviceRegionParams>& regions) {
  if (!(Ts > 0)) throw std::invalid_argument("build_polytopic: Ts must be positive");
  if (regions.empty()) throw std::invalid_argument("build_polytopic: no regions");
  PolytopicModel m;
  m.Ts = Ts;
  for (const auto& r : regions) m.vertices.push_back(discretize_vertex(coupled_vertex(hand, r), Ts));
  return m;
}

PolytopicModel make_polytopic(std::vector<VertexModel> vertices, double Ts) {
  if (vertices.empty()) throw std::invalid_argument("make_polytopic: no vertices");
  PolytopicModel m;
  m.vertices = std::move(vertices);
  m.Ts = Ts;
  return m;
}

VertexModel make_vertex(const Mat& A, const Mat& B, const Mat& C) {
  VertexModel v;
  v.A = A;
  v.B = B;
  v.C = C;
  v.has_displacement = false;
  return v;
}

PlantState make_plant_state(int n) {
  PlantState s;
  s.x = Vec::Zero(n);
  s.x_m = 0.0;
  return s;
}

PlantState step_plant(const PlantState& s, double u, const PolytopicModel& m) {
  if (!std::isfinite(u)) throw std::invalid_argument("step_plant: non-finite input");
  const VertexModel& v = m.vertices.at(m.active_vertex(s.x_m));
  PlantState out;
  out.x = v.A * s.x + v.B * u;
  out.x_m = s.x_m;
  if (v.has_displacement) out.x_m += v.disp_row.dot(s.x) + v.disp_gain * u;
  if (!out.x.allFinite()) throw std::runtime_error("step_plant: state diverged");
  return out;
}

double plant_output(const PlantState& s, const PolytopicModel& m) {
  const VertexModel& v = m.vertices.at(m.active_vertex(s.x_m));
  return (v.C * s.x)(0, 0);
}

}  // namespace hmpc
