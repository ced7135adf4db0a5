#pragma once

// Normal-incidence optics of magneto-dielectric slab stacks.
//
// Time convention is exp(-i omega t). Refractive indices are taken on the
// branch Im n >= 0, so fields decay inside absorbing layers, and a passive
// medium has Im eps >= 0, Im mu >= 0. This matches the -i gamma omega damping
// of the susceptibility.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "zpol/constants.hpp"
#include "zpol/errors.hpp"
#include "zpol/magnetic_response.hpp"

namespace zpol {

using cplx = std::complex<double>;

struct Layer {
  double thickness = 0.0;  // m
  cplx epsilon_r{1.0, 0.0};
  std::optional<SusceptibilityModel> magnetic;  // empty: mu_r = 1

  static Layer dielectric(double thickness, double index) {
    return Layer{thickness, cplx{index * index, 0.0}, std::nullopt};
  }
  static Layer magnetic_slab(double thickness, double index, SusceptibilityModel model) {
    return Layer{thickness, cplx{index * index, 0.0}, std::move(model)};
  }

  cplx mu_r(double omega) const { return magnetic ? mu_r_at(*magnetic, omega) : cplx{1.0, 0.0}; }
};

/// n = sqrt(eps mu) on the decaying branch.
inline cplx refractive_index(cplx epsilon_r, cplx mu_r) {
  cplx n = std::sqrt(epsilon_r * mu_r);
  if (n.imag() < 0.0 || (n.imag() == 0.0 && n.real() < 0.0)) n = -n;
  return n;
}

struct Spectrum {
  std::vector<double> frequency_hz;
  std::vector<cplx> t_complex;
  std::vector<cplx> r_complex;
  std::vector<double> transmittance;
  std::vector<double> reflectance;

  std::size_t size() const { return frequency_hz.size(); }
};

/// Amplitude transmission/reflection of a stack between vacuum half-spaces
/// at one angular frequency.
struct Amplitudes {
  cplx t;
  cplx r;
};

inline Amplitudes stack_amplitudes(std::span<const Layer> stack, double omega) {
  // Characteristic matrix [[cos d, -i sin d / Y], [-i Y sin d, cos d]] with
  // admittance Y = n / mu relative to vacuum.
  cplx m11{1.0, 0.0}, m12{0.0, 0.0}, m21{0.0, 0.0}, m22{1.0, 0.0};
  const cplx i{0.0, 1.0};
  for (const Layer& layer : stack) {
    if (layer.thickness == 0.0) continue;
    const cplx mu = layer.mu_r(omega);
    const cplx n = refractive_index(layer.epsilon_r, mu);
    const cplx y = n / mu;
    const cplx delta = n * omega * layer.thickness / constants::speed_of_light;
    const cplx c = std::cos(delta);
    const cplx s = std::sin(delta);
    const cplx a11 = c, a12 = -i * s / y, a21 = -i * y * s, a22 = c;
    const cplx n11 = m11 * a11 + m12 * a21;
    const cplx n12 = m11 * a12 + m12 * a22;
    const cplx n21 = m21 * a11 + m22 * a21;
    const cplx n22 = m21 * a12 + m22 * a22;
    m11 = n11;
    m12 = n12;
    m21 = n21;
    m22 = n22;
  }
  const cplx denom = m11 + m12 + m21 + m22;
  return {2.0 / denom, (m11 + m12 - m21 - m22) / denom};
}

inline Spectrum transfer_matrix_spectrum(std::span<const Layer> stack, std::span<const double> frequency_hz) {
  for (const Layer& layer : stack) {
    if (layer.thickness < 0.0) throw DomainError("layer thickness must be nonnegative");
  }
  for (std::size_t k = 1; k < frequency_hz.size(); ++k) {
    if (!(frequency_hz[k] > frequency_hz[k - 1])) throw DomainError("frequency grid must be strictly increasing");
  }
  Spectrum out;
  out.frequency_hz.assign(frequency_hz.begin(), frequency_hz.end());
  const std::size_t count = frequency_hz.size();
  out.t_complex.resize(count);
  out.r_complex.resize(count);
  out.transmittance.resize(count);
  out.reflectance.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Amplitudes a = stack_amplitudes(stack, hz_to_rad_s(frequency_hz[k]));
    out.t_complex[k] = a.t;
    out.r_complex[k] = a.r;
    out.transmittance[k] = std::norm(a.t);
    out.reflectance[k] = std::norm(a.r);
  }
  return out;
}

/// Closed-form Fabry-Perot estimates for a bare slab in vacuum.
struct CavityDiagnostics {
  std::vector<double> mode_frequencies_hz;  // j = 1..j_max
  double free_spectral_range_hz = 0.0;
  double linewidth_hz = 0.0;  // evaluated at the fundamental mode
  double surface_reflection = 0.0;
};

inline double free_spectral_range_hz(double index, double thickness) {
  return constants::speed_of_light / (2.0 * index * thickness);
}

inline CavityDiagnostics fp_diagnostics(double index, double thickness, int j_max) {
  if (!(index > 1.0)) throw DomainError("refractive index must exceed 1");
  if (!(thickness > 0.0)) throw DomainError("thickness must be positive");
  if (j_max < 1) throw DomainError("need at least one mode");
  CavityDiagnostics d;
  d.free_spectral_range_hz = free_spectral_range_hz(index, thickness);
  for (int j = 1; j <= j_max; ++j) d.mode_frequencies_hz.push_back(j * d.free_spectral_range_hz);
  d.surface_reflection = std::pow(std::abs((index - 1.0) / (index + 1.0)), 4);
  d.linewidth_hz = d.free_spectral_range_hz * std::sqrt(d.surface_reflection) / (1.0 - d.surface_reflection);
  return d;
}

namespace detail {

using Poly = std::vector<cplx>;  // ascending powers

inline Poly poly_mul(const Poly& a, const Poly& b) {
  Poly out(a.size() + b.size() - 1, cplx{0.0, 0.0});
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) out[i + j] += a[i] * b[j];
  return out;
}

inline void poly_add(Poly& into, const Poly& b) {
  if (into.size() < b.size()) into.resize(b.size(), cplx{0.0, 0.0});
  for (std::size_t i = 0; i < b.size(); ++i) into[i] += b[i];
}

inline std::vector<cplx> poly_roots(Poly p) {
  while (p.size() > 1 && p.back() == cplx{0.0, 0.0}) p.pop_back();
  const std::size_t degree = p.size() - 1;
  if (degree == 0) return {};
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(degree, degree);
  for (std::size_t i = 1; i < degree; ++i) companion(i, i - 1) = 1.0;
  for (std::size_t i = 0; i < degree; ++i) companion(i, degree - 1) = -p[i] / p[degree];
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  std::vector<cplx> roots(degree);
  for (std::size_t i = 0; i < degree; ++i) roots[i] = solver.eigenvalues()[static_cast<Eigen::Index>(i)];
  return roots;
}

}  // namespace detail

/// Complex eigenfrequencies of the bulk polariton at real wavevector k:
/// omega^2 eps_r mu_r(omega) = c^2 k^2, roots with Re omega > 0 sorted by Re.
///
/// mu_r is rational in omega, so the condition is a polynomial. Transitions
/// sharing a frequency are merged before expansion, then each root is
/// Newton-polished on the rational form.
inline std::vector<cplx> dispersion_roots(const SusceptibilityModel& model, double epsilon_r, double k) {
  if (!(k > 0.0)) throw DomainError("wavevector must be positive");
  if (!(epsilon_r > 0.0)) throw DomainError("permittivity must be positive");
  const double omega_ref = constants::speed_of_light * k / std::sqrt(epsilon_r);
  const double gamma = model.gamma / omega_ref;

  struct Oscillator {
    double omega;
    double strength;
  };
  std::vector<Oscillator> oscillators;
  for (const Transition& t : model.transitions) {
    if (t.strength == 0.0) continue;
    const double w = std::abs(t.omega) / omega_ref;
    const double a = t.strength / (omega_ref * omega_ref);
    auto same = std::find_if(oscillators.begin(), oscillators.end(),
                             [&](const Oscillator& o) { return std::abs(o.omega - w) <= 1e-12 * std::max(w, 1.0); });
    if (same != oscillators.end()) {
      same->strength += a;
    } else {
      oscillators.push_back({w, a});
    }
  }

  // (x^2 - 1) prod_l D_l + sum_l A_l prod_{j != l} D_j, D_l = w_l^2 - x^2 - i gamma x.
  const cplx i{0.0, 1.0};
  auto denominator = [&](const Oscillator& o) { return detail::Poly{o.omega * o.omega, -i * gamma, -1.0}; };
  detail::Poly poly{-1.0, 0.0, 1.0};
  for (const Oscillator& o : oscillators) poly = detail::poly_mul(poly, denominator(o));
  for (std::size_t l = 0; l < oscillators.size(); ++l) {
    detail::Poly term{oscillators[l].strength};
    for (std::size_t j = 0; j < oscillators.size(); ++j)
      if (j != l) term = detail::poly_mul(term, denominator(oscillators[j]));
    detail::poly_add(poly, term);
  }

  auto residual = [&](cplx x, cplx& derivative) {
    cplx f = x * x - 1.0;
    derivative = 2.0 * x;
    for (const Oscillator& o : oscillators) {
      const cplx d = o.omega * o.omega - x * x - i * gamma * x;
      f += o.strength / d;
      derivative += o.strength * (2.0 * x + i * gamma) / (d * d);
    }
    return f;
  };

  std::vector<cplx> roots;
  for (cplx x : detail::poly_roots(poly)) {
    double last_step = 0.0;
    for (int iter = 0; iter < 60; ++iter) {
      cplx derivative;
      const cplx f = residual(x, derivative);
      if (f == cplx{0.0, 0.0}) {
        last_step = 0.0;
        break;
      }
      const cplx step = f / derivative;
      x -= step;
      last_step = std::abs(step);
      if (last_step <= 1e-15 * std::abs(x)) break;
    }
    if (!(last_step <= 1e-10 * std::abs(x))) {
      throw ConvergenceError("dispersion root failed to polish to 1e-10 relative");
    }
    if (x.real() > 1e-12) roots.push_back(x * omega_ref);
  }
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) { return a.real() < b.real(); });
  return roots;
}

}  // namespace zpol
