// Zero-detuning splitting of the 180 um GGG slab as the sample warms up.

#include <cstdio>

#include "zpol/polariton_analysis.hpp"

int main() {
  zpol::SpinSystem ggg = zpol::SpinSystem::gd_ggg();
  ggg.g_factor = 2.0;

  const zpol::CavityGeometry slab{3.8, 180e-6, 1};
  const double gamma = zpol::ghz_to_rad_s(80.0);

  std::printf("cavity mode %.2f GHz, FSR %.2f GHz\n", slab.mode_hz() / 1e9, slab.fsr_hz() / 1e9);
  for (double t : {1.5, 5.0, 10.0, 25.0, 50.0, 100.0}) {
    const auto m = zpol::vrs_at_zero_detuning(ggg, slab, t, std::nullopt, gamma);
    std::printf("T = %6.1f K  B = %.3f T  g0 = %.1f GHz  VRS = %6.1f GHz %s\n", t, m.zero_detuning_field,
                zpol::rad_s_to_ghz(m.g0), m.vrs_hz / 1e9, m.resolved ? "" : "(unresolved)");
  }
}
