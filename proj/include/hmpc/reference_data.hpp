#pragma once

#include "hmpc/model_lib.hpp"
#include "hmpc/observer.hpp"

// Published reference data for the single-axis haptic device: the three
// discretized vertex models (Ts = 5 ms) and the reference observer synthesis
// result. Used as regression fixtures and by the check-matrices report.
namespace hmpc::refdata {

inline std::vector<VertexModel> reference_vertices() {
  Mat A1(3, 3), A2(3, 3), A3(3, 3), B1(3, 1), B2(3, 1), B3(3, 1), C1(1, 3), C2(1, 3), C3(1, 3);
  A1 << 879.7, -64.3, -42.61, 150.3, 994.8, -3.482, 6.141, 79.86, 999.9;
  B1 << 2.349, 0.1919, 0.005171;
  C1 << 0.0, 0.3891, 0.2637;
  A2 << 853.1, -71.38, -57.73, 148.1, 994.2, -4.74, 6.141, 79.86, 999.9;
  B2 << 2.314, 0.19, 0.005133;
  C2 << 0.0, 0.3691, 0.2502;
  A3 << 789.9, -88.16, -93.57, 142.7, 992.8, -7.779, 5.934, 79.81, 999.8;
  B3 << 2.230, 0.1854, 0.00504;
  C3 << 0.0, 0.2483, 0.1683;
  return {make_vertex(1e-3 * A1, 1e-3 * B1, C1), make_vertex(1e-3 * A2, 1e-3 * B2, C2),
          make_vertex(1e-3 * A3, 1e-3 * B3, C3)};
}

inline PolytopicModel reference_model(double Ts = 0.005) {
  return make_polytopic(reference_vertices(), Ts);
}

// Reference observer certificate and gain as published (4 significant digits).
inline Mat reference_Pe() {
  Mat P(3, 3);
  P << 0.1004, -0.3294, -0.2415, -0.3294, 3.3957, 2.3057, -0.2415, 2.3057, 1.6150;
  return 1e8 * P;
}

inline Mat reference_Ye() {
  Mat Y(3, 1);
  Y << -0.0804, 4.6058, 3.1403;
  return 1e8 * Y;
}

inline Mat reference_Lp() {
  Mat L(3, 1);
  L << -54.4612, 253.5053, -368.1313;
  return L;
}

inline double reference_rho2() { return 0.7; }

}  // namespace hmpc::refdata
