#pragma once

#include "zpol/constants.hpp"
#include "zpol/polariton_analysis.hpp"

namespace fixtures {

/// 180 um slab, fundamental mode, pure Zeeman g = 2.0.
inline zpol::SpinSystem sample1_spins() {
  zpol::SpinSystem sys = zpol::SpinSystem::gd_ggg();
  sys.g_factor = 2.0;
  return sys;
}
inline zpol::CavityGeometry sample1_cavity() { return {3.8, 180e-6, 1}; }

/// 129 um slab on its second mode; g calibrated so the EPR line sits at
/// 608 GHz at 21.5 T.
inline double sample2_g_factor() {
  return 608e9 * zpol::constants::planck / (zpol::constants::bohr_magneton * 21.5);
}
inline zpol::SpinSystem sample2_spins() {
  zpol::SpinSystem sys = zpol::SpinSystem::gd_ggg();
  sys.g_factor = sample2_g_factor();
  return sys;
}
inline zpol::CavityGeometry sample2_cavity() { return {3.8, 129e-6, 2}; }

inline const double kGamma = zpol::ghz_to_rad_s(80.0);
inline const double kG0Sample1 = zpol::ghz_to_rad_s(47.5);
inline const double kG0Sample2 = zpol::ghz_to_rad_s(79.3);

}  // namespace fixtures
