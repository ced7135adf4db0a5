#pragma once

// Independent reference implementations. None of these call into the
// library's physics; they share only the constants table.

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "zpol/constants.hpp"

namespace oracle {

using cplx = std::complex<double>;

/// Boltzmann weights in long double with no rebasing.
inline std::vector<long double> boltzmann(const std::vector<double>& energies, double temperature) {
  const long double kt = static_cast<long double>(zpol::constants::boltzmann) * temperature;
  std::vector<long double> p(energies.size());
  long double z = 0.0L;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    p[i] = std::exp(-static_cast<long double>(energies[i]) / kt);
    z += p[i];
  }
  for (auto& v : p) v /= z;
  return p;
}

/// Zeeman energies g mu_B m B + offset, m = -s..s, written out longhand.
inline std::vector<double> zeeman_energies(double spin, double g, double field, const std::vector<double>& offsets = {}) {
  std::vector<double> e;
  int k = 0;
  for (double m = -spin; m <= spin + 1e-9; m += 1.0, ++k) {
    e.push_back(g * zpol::constants::bohr_magneton * m * field + (offsets.empty() ? 0.0 : offsets[k]));
  }
  return e;
}

/// s_x in the |s, m> basis (m ascending) from the ladder operators.
inline Eigen::MatrixXd spin_x(double spin) {
  const int dim = static_cast<int>(std::lround(2.0 * spin)) + 1;
  Eigen::MatrixXd sp = Eigen::MatrixXd::Zero(dim, dim);
  for (int k = 0; k + 1 < dim; ++k) {
    const double m = -spin + k;
    sp(k + 1, k) = std::sqrt(spin * (spin + 1.0) - m * (m + 1.0));
  }
  return 0.5 * (sp + sp.transpose());
}

/// chi(w) = -(2 N mu0 / (V hbar)) sum_{a,b} P_a |d_ab|^2 w_ab / (w_ab^2 - w^2 - i gamma w),
/// with d = g mu_B s_x and w_ab = (E_a - E_b) / hbar. This is the analytic
/// time integral of the dipole commutator with the damping written in the
/// -i gamma w form.
struct KuboInput {
  double spin = 3.5;
  double g = 2.0;
  double density = 0.0;
  double field = 0.0;
  double temperature = 0.0;
  double gamma = 0.0;
  std::vector<double> offsets;
};

inline std::vector<cplx> kubo_chi(const KuboInput& in, const std::vector<double>& omega) {
  using zpol::constants::hbar;
  const std::vector<double> e = zeeman_energies(in.spin, in.g, in.field, in.offsets);
  const std::vector<long double> p = boltzmann(e, in.temperature);
  const Eigen::MatrixXd d = in.g * zpol::constants::bohr_magneton * spin_x(in.spin);
  const double prefactor = -2.0 * in.density * zpol::constants::vacuum_permeability / hbar;
  std::vector<cplx> chi(omega.size(), cplx{0.0, 0.0});
  for (std::size_t a = 0; a < e.size(); ++a) {
    for (std::size_t b = 0; b < e.size(); ++b) {
      const double dab = d(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
      if (dab == 0.0) continue;
      const double wab = (e[a] - e[b]) / hbar;
      const double weight = prefactor * static_cast<double>(p[a]) * dab * dab * wab;
      for (std::size_t k = 0; k < omega.size(); ++k) {
        chi[k] += weight / cplx(wab * wab - omega[k] * omega[k], -in.gamma * omega[k]);
      }
    }
  }
  return chi;
}

/// Single slab in vacuum by explicit summation of the internal bounces.
struct AiryResult {
  cplx t;
  cplx r;
};

inline AiryResult airy_slab(cplx n, cplx mu, double thickness, double omega, int bounces = 200) {
  const cplx y = n / mu;
  const cplx r01 = (1.0 - y) / (1.0 + y);
  const cplx t01 = 2.0 / (1.0 + y);
  const cplx t10 = 2.0 * y / (1.0 + y);
  const cplx r10 = -r01;
  const cplx phase = std::exp(cplx{0.0, 1.0} * n * omega * thickness / zpol::constants::speed_of_light);
  const cplx round_trip = r10 * r10 * phase * phase;
  cplx t{0.0, 0.0};
  cplx r = r01;
  cplx term = t01 * t10 * phase;
  for (int k = 0; k < bounces; ++k) {
    t += term;
    r += term * r10 * phase;
    term *= round_trip;
  }
  return {t, r};
}

}  // namespace oracle
