#pragma once

// Reference quantum models: the finite-N Dicke Hamiltonian solved by exact
// diagonalization, and its bosonic (Hopfield) limit in closed form.
//
// Energies are angular frequencies (hbar = 1, rad/s).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "zpol/errors.hpp"
#include "zpol/spin_ladder.hpp"

namespace zpol {

/// <-s+1| s_x |-s> in units of hbar: the factor a spin-s ladder contributes
/// when truncated to its two lowest levels (sqrt(7)/2 for s = 7/2).
inline double truncate_spin_to_two_level(const SpinSystem& sys) {
  const double s = sys.spin;
  const double m = -s + 1.0;
  return 0.5 * std::sqrt((s + m) * (s - m + 1.0));
}

/// H = w_cav a^dag a + w_a S_z + (2 g0 / sqrt(N)) S_x (a^dag + a), with S the
/// collective spin-N/2. Without counter-rotating terms the coupling becomes
/// (g0 / sqrt(N)) (S_+ a + S_- a^dag).
struct DickeModel {
  int n_spins = 1;
  double omega_cav = 1.0;
  double omega_a = 1.0;
  double g0 = 0.0;
  int photon_cutoff = 40;
  bool counter_rotating = true;
};

struct DickeSpectrum {
  std::vector<double> eigenvalues;  // ascending, rad/s
  int photon_cutoff = 0;            // cutoff that passed the convergence gate
  std::size_t dimension = 0;
};

struct DickeOptions {
  std::size_t max_dimension = 4000;
  double gate_tolerance = 1e-8;  // relative shift of the lowest 4 levels on doubling the cutoff
};

namespace detail {

inline Eigen::VectorXd dicke_eigenvalues(const DickeModel& model, int cutoff) {
  const int spin_dim = model.n_spins + 1;
  const double j = 0.5 * model.n_spins;
  const Eigen::Index dim = static_cast<Eigen::Index>(cutoff) * spin_dim;
  const double scale = model.omega_cav;  // work in units of omega_cav
  const double wa = model.omega_a / scale;
  const double lambda = model.g0 / scale / std::sqrt(static_cast<double>(model.n_spins));

  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(dim, dim);
  auto index = [&](int n, int k) { return static_cast<Eigen::Index>(n) * spin_dim + k; };
  for (int n = 0; n < cutoff; ++n) {
    for (int k = 0; k < spin_dim; ++k) {
      const double m = -j + k;
      h(index(n, k), index(n, k)) = n + wa * m;
      // Couplings pair (n, k) with (n + 1, k +- 1).
      if (n + 1 < cutoff) {
        const double photon = std::sqrt(static_cast<double>(n + 1));
        // S_+ |m> = sqrt(j(j+1) - m(m+1)) |m+1>; S_x = (S_+ + S_-) / 2.
        if (k + 1 < spin_dim) {
          const double up = std::sqrt(j * (j + 1.0) - m * (m + 1.0));
          // a^dag S_+ is counter-rotating; a S_+ (written here as its transpose a^dag S_-) is not.
          const double coef = model.counter_rotating ? lambda * up * photon : 0.0;
          h(index(n + 1, k + 1), index(n, k)) += coef;
          h(index(n, k), index(n + 1, k + 1)) += coef;
        }
        if (k > 0) {
          const double down = std::sqrt(j * (j + 1.0) - m * (m - 1.0));
          const double coef = lambda * down * photon;
          h(index(n + 1, k - 1), index(n, k)) += coef;
          h(index(n, k), index(n + 1, k - 1)) += coef;
        }
      }
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h, Eigen::EigenvaluesOnly);
  return solver.eigenvalues() * scale;
}

}  // namespace detail

/// Lowest `n_levels` eigenvalues. The photon cutoff starts at the model's
/// value and doubles until the lowest four levels move by less than the gate
/// tolerance.
inline DickeSpectrum dicke_eigenspectrum(const DickeModel& model, int n_levels, const DickeOptions& options = {}) {
  if (model.n_spins < 1) throw DomainError("Dicke model needs at least one spin");
  if (model.photon_cutoff < 2) throw DomainError("photon cutoff must be at least 2");
  if (!(model.omega_cav > 0.0) || !(model.omega_a > 0.0) || model.g0 < 0.0) {
    throw DomainError("Dicke frequencies must be positive and g0 nonnegative");
  }
  if (n_levels < 1) throw DomainError("need at least one level");

  const auto spin_dim = static_cast<std::size_t>(model.n_spins + 1);
  int cutoff = model.photon_cutoff;
  if (static_cast<std::size_t>(cutoff) * spin_dim > options.max_dimension) {
    throw ConvergenceError("Dicke basis exceeds the dimension cap at the initial cutoff");
  }
  Eigen::VectorXd coarse = detail::dicke_eigenvalues(model, cutoff);
  const int gated = std::min<int>(4, static_cast<int>(coarse.size()));
  while (true) {
    const int next = 2 * cutoff;
    if (static_cast<std::size_t>(next) * spin_dim > options.max_dimension) {
      throw ConvergenceError("Dicke convergence gate failed: photon cutoff " + std::to_string(cutoff) +
                             " is not converged and doubling exceeds the dimension cap");
    }
    Eigen::VectorXd fine = detail::dicke_eigenvalues(model, next);
    bool converged = true;
    for (int i = 0; i < gated; ++i) {
      const double reference = std::max(std::abs(fine[i]), model.omega_cav);
      if (std::abs(fine[i] - coarse[i]) > options.gate_tolerance * reference) converged = false;
    }
    if (converged) {
      DickeSpectrum out;
      out.photon_cutoff = cutoff;
      out.dimension = static_cast<std::size_t>(cutoff) * spin_dim;
      const int keep = std::min<int>(n_levels, static_cast<int>(coarse.size()));
      out.eigenvalues.assign(coarse.data(), coarse.data() + keep);
      return out;
    }
    cutoff = next;
    coarse = std::move(fine);
  }
}

/// Gap between the first two excited states (the polariton doublet).
inline double dicke_splitting(const DickeModel& model, const DickeOptions& options = {}) {
  const DickeSpectrum spectrum = dicke_eigenspectrum(model, 3, options);
  return spectrum.eigenvalues[2] - spectrum.eigenvalues[1];
}

struct HopfieldSpectrum {
  double omega_lower = 0.0;
  double omega_upper = 0.0;
  double photon_fraction_lower = 0.0;  // |photon amplitude|^2 of each branch
  double photon_fraction_upper = 0.0;

  double splitting() const { return omega_upper - omega_lower; }
};

/// Lossless single-oscillator polaritons from omega^2 mu_r(omega) = omega_cav^2,
/// mu_r = 1 / (1 - 4 g^2 / (omega_m^2 - omega^2)):
///   (omega^2 - omega_cav^2)(omega^2 - omega_m^2) = 4 g^2 omega_cav^2.
/// There is no diamagnetic term, so the branches repel symmetrically in
/// omega^2.
inline HopfieldSpectrum hopfield_branches(double omega_cav, double omega_matter, double g_eff) {
  if (!(omega_cav > 0.0) || !(omega_matter > 0.0) || g_eff < 0.0) {
    throw DomainError("Hopfield frequencies must be positive and the coupling nonnegative");
  }
  const double wc2 = omega_cav * omega_cav;
  const double wm2 = omega_matter * omega_matter;
  const double off = 2.0 * g_eff * omega_cav;
  const double mean = 0.5 * (wc2 + wm2);
  const double half_gap = std::sqrt(0.25 * (wc2 - wm2) * (wc2 - wm2) + off * off);
  const double lower2 = mean - half_gap;
  if (!(lower2 > 0.0)) throw DomainError("coupling too strong: lower polariton branch is unstable");

  HopfieldSpectrum out;
  out.omega_lower = std::sqrt(lower2);
  out.omega_upper = std::sqrt(mean + half_gap);
  if (off == 0.0) {
    const double lower_is_photon = wc2 < wm2 ? 1.0 : (wc2 > wm2 ? 0.0 : 0.5);
    out.photon_fraction_lower = lower_is_photon;
    out.photon_fraction_upper = 1.0 - lower_is_photon;
    return out;
  }
  auto photon_fraction = [&](double x) {
    const double matter = x - wc2;  // eigenvector (off, x - wc2)
    return off * off / (off * off + matter * matter);
  };
  out.photon_fraction_lower = photon_fraction(lower2);
  out.photon_fraction_upper = photon_fraction(mean + half_gap);
  return out;
}

}  // namespace zpol
