#pragma once

// Least-squares fit of the zero-temperature coupling (and optionally the
// matter damping) to vacuum Rabi splittings measured against temperature.
//
// Every objective evaluation re-simulates the transmission spectrum at each
// dataset temperature. The optimizer is a bounded Levenberg-Marquardt with a
// central finite-difference Jacobian; it has no random component, so identical
// inputs give identical results. If the first start does not converge, five
// starts spread evenly over the g0 bounds are tried and the best converged one
// is kept.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "zpol/constants.hpp"
#include "zpol/errors.hpp"
#include "zpol/parallel.hpp"
#include "zpol/polariton_analysis.hpp"

namespace zpol {

struct VrsRow {
  double temperature = 0.0;  // K
  double vrs_hz = 0.0;
  std::optional<double> uncertainty_hz;
};

struct VrsDataset {
  std::vector<VrsRow> rows;
  CavityGeometry cavity;
  std::optional<double> zero_detuning_field;  // T; searched from the geometry when absent
  double resolution_floor_hz = 65e9;

  /// Rows below the resolution floor carry no usable splitting.
  bool censored(const VrsRow& row) const { return row.vrs_hz < resolution_floor_hz; }

  std::size_t uncensored_count() const {
    return static_cast<std::size_t>(
        std::count_if(rows.begin(), rows.end(), [&](const VrsRow& r) { return !censored(r); }));
  }

  /// Sorts by temperature and checks the row invariants.
  void normalize() {
    std::sort(rows.begin(), rows.end(), [](const VrsRow& a, const VrsRow& b) { return a.temperature < b.temperature; });
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (!(rows[i].temperature > 0.0)) throw DomainError("dataset temperatures must be positive");
      if (i > 0 && !(rows[i].temperature > rows[i - 1].temperature)) {
        throw DomainError("dataset temperatures must be distinct");
      }
      if (!(rows[i].vrs_hz >= 0.0)) throw DomainError("dataset splittings must be nonnegative");
      if (rows[i].uncertainty_hz && !(*rows[i].uncertainty_hz > 0.0)) {
        throw DomainError("dataset uncertainties must be positive");
      }
    }
  }
};

struct VrsPoint {
  double temperature = 0.0;
  double vrs_hz = 0.0;
  bool resolved = false;
};

/// Omega_VRS(T) with the field pinned at `field`.
inline std::vector<VrsPoint> simulate_vrs_curve(const SpinSystem& sys, const CavityGeometry& cavity, double field,
                                                double g0, double gamma, std::span<const double> temperatures,
                                                VrsOptions options = {}, unsigned threads = 1) {
  if (g0 < 0.0 || !(gamma > 0.0)) throw DomainError("g0 must be nonnegative and gamma positive");
  options.field = field;
  std::vector<VrsPoint> curve(temperatures.size());
  parallel_for(temperatures.size(), threads, [&](std::size_t i) {
    const PolaritonMetrics m = vrs_at_zero_detuning(sys, cavity, temperatures[i], g0, gamma, options);
    curve[i] = {temperatures[i], m.vrs_hz, m.resolved};
  });
  return curve;
}

struct FitOptions {
  bool free_gamma = false;
  double initial_g0 = ghz_to_rad_s(30.0);
  double initial_gamma = ghz_to_rad_s(80.0);
  std::array<double, 2> g0_bounds{ghz_to_rad_s(1.0), ghz_to_rad_s(200.0)};
  std::array<double, 2> gamma_bounds{ghz_to_rad_s(5.0), ghz_to_rad_s(400.0)};
  int max_iterations = 100;
  double gradient_tolerance = 1e-3;  // on |J^T r| / (|J| |r|)
  double residual_floor_ghz = 1e-6;  // an rms below this counts as an exact fit
  unsigned threads = 1;
  VrsOptions vrs;
};

struct FitResult {
  double g0_fit = 0.0;     // rad/s
  double gamma_fit = 0.0;  // rad/s; pinned value when gamma is not free
  bool gamma_free = false;
  double residual_norm_hz = 0.0;          // weighted rms over uncensored rows
  double objective = 0.0;                 // sum of squared weighted residuals (GHz^2 or sigma units)
  std::vector<double> per_point_residuals_hz;  // simulated - observed; NaN for censored rows
  double g0_uncertainty = 0.0;            // rad/s, from the residual curvature
  double gamma_uncertainty = 0.0;
  double gradient_norm = 0.0;             // |J^T r| / (|J| |r|) at the solution
  int iterations = 0;
  int starts = 0;
  bool converged = false;
};

namespace detail {

struct FitProblem {
  const VrsDataset& data;
  const SpinSystem& sys;
  const FitOptions& options;
  double field;
  std::vector<double> temperatures;  // uncensored only
  std::vector<double> observed_ghz;
  std::vector<double> sigma_ghz;     // 1 when absent
  bool weighted = false;

  // Parameters in GHz: {g0, gamma}.
  Eigen::VectorXd residuals(const Eigen::Vector2d& p) const {
    const auto curve = simulate_vrs_curve(sys, data.cavity, field, ghz_to_rad_s(p[0]), ghz_to_rad_s(p[1]),
                                          temperatures, options.vrs, options.threads);
    Eigen::VectorXd r(static_cast<Eigen::Index>(curve.size()));
    for (std::size_t i = 0; i < curve.size(); ++i) {
      r[static_cast<Eigen::Index>(i)] = (curve[i].vrs_hz / 1e9 - observed_ghz[i]) / sigma_ghz[i];
    }
    return r;
  }
};

struct LocalFit {
  Eigen::Vector2d p;
  Eigen::VectorXd r;
  Eigen::MatrixXd jacobian;
  double gradient_norm = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
};

inline LocalFit levenberg_marquardt(const FitProblem& problem, Eigen::Vector2d p, const Eigen::Vector2d& lo,
                                    const Eigen::Vector2d& hi) {
  const FitOptions& opt = problem.options;
  const int free_params = opt.free_gamma ? 2 : 1;
  const std::array<double, 2> fd_step{0.02, 0.05};  // GHz

  auto jacobian_at = [&](const Eigen::Vector2d& x) {
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(problem.temperatures.size()), free_params);
    for (int k = 0; k < free_params; ++k) {
      Eigen::Vector2d up = x, down = x;
      up[k] = std::min(hi[k], x[k] + fd_step[static_cast<std::size_t>(k)]);
      down[k] = std::max(lo[k], x[k] - fd_step[static_cast<std::size_t>(k)]);
      jac.col(k) = (problem.residuals(up) - problem.residuals(down)) / (up[k] - down[k]);
    }
    return jac;
  };

  // Gradient components that push against an active bound are dropped.
  auto projected_gradient = [&](const Eigen::Vector2d& x, const Eigen::MatrixXd& jac, const Eigen::VectorXd& r) {
    Eigen::VectorXd g = jac.transpose() * r;
    for (int k = 0; k < free_params; ++k) {
      if ((x[k] <= lo[k] && g[k] > 0.0) || (x[k] >= hi[k] && g[k] < 0.0)) g[k] = 0.0;
    }
    // A vanishing Jacobian means the model is flat here (every splitting
    // unresolved), which is not a stationary point worth reporting.
    if (jac.norm() == 0.0) return std::numeric_limits<double>::infinity();
    const double scale = jac.norm() * r.norm();
    return scale > 0.0 ? g.norm() / scale : 0.0;
  };

  auto exact = [&](const Eigen::VectorXd& r) {
    return std::sqrt(r.squaredNorm() / static_cast<double>(r.size())) <= opt.residual_floor_ghz;
  };

  LocalFit fit;
  fit.p = p;
  fit.r = problem.residuals(p);
  double cost = fit.r.squaredNorm();
  double lambda = 1e-3;

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    fit.iterations = iter + 1;
    fit.jacobian = jacobian_at(fit.p);
    fit.gradient_norm = projected_gradient(fit.p, fit.jacobian, fit.r);
    if (exact(fit.r) || fit.gradient_norm <= opt.gradient_tolerance) {
      fit.converged = true;
      return fit;
    }
    const Eigen::MatrixXd jtj = fit.jacobian.transpose() * fit.jacobian;
    const Eigen::VectorXd jtr = fit.jacobian.transpose() * fit.r;
    bool improved = false;
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::MatrixXd damped = jtj;
      for (int k = 0; k < free_params; ++k) damped(k, k) += lambda * std::max(jtj(k, k), 1e-12);
      const Eigen::VectorXd step = damped.ldlt().solve(-jtr);
      Eigen::Vector2d trial = fit.p;
      for (int k = 0; k < free_params; ++k) trial[k] = std::clamp(fit.p[k] + step[k], lo[k], hi[k]);
      if ((trial - fit.p).norm() <= 1e-10 * (1.0 + fit.p.norm())) break;
      const Eigen::VectorXd r_trial = problem.residuals(trial);
      const double trial_cost = r_trial.squaredNorm();
      if (trial_cost < cost) {
        fit.p = trial;
        fit.r = r_trial;
        cost = trial_cost;
        lambda = std::max(lambda / 3.0, 1e-9);
        improved = true;
        break;
      }
      lambda *= 4.0;
    }
    if (!improved) {
      // No downhill step exists at any damping: a (possibly nonsmooth) minimum.
      fit.jacobian = jacobian_at(fit.p);
      fit.gradient_norm = projected_gradient(fit.p, fit.jacobian, fit.r);
      fit.converged = exact(fit.r) || fit.gradient_norm <= opt.gradient_tolerance;
      return fit;
    }
  }
  fit.jacobian = jacobian_at(fit.p);
  fit.gradient_norm = projected_gradient(fit.p, fit.jacobian, fit.r);
  fit.converged = exact(fit.r) || fit.gradient_norm <= opt.gradient_tolerance;
  return fit;
}

}  // namespace detail

/// Bounded least squares of sum_i ((Omega_sim(T_i) - Omega_obs(T_i)) / sigma_i)^2
/// over uncensored rows; sigma_i = 1 GHz when the row has no uncertainty.
inline FitResult fit_g0(VrsDataset dataset, const SpinSystem& sys, const FitOptions& options = {}) {
  dataset.normalize();
  dataset.cavity.validate();
  if (dataset.rows.empty() || dataset.uncensored_count() == 0) {
    throw DomainError("all dataset rows are censored (below the resolution floor)");
  }
  if (dataset.uncensored_count() < 3) throw DomainError("fit needs at least three uncensored rows");
  const auto in = [](double v, const std::array<double, 2>& b) { return v >= b[0] && v <= b[1]; };
  if (!(options.g0_bounds[0] > 0.0 && options.g0_bounds[1] > options.g0_bounds[0]) ||
      !in(options.initial_g0, options.g0_bounds)) {
    throw DomainError("initial g0 must lie within valid bounds");
  }
  if (options.free_gamma && (!(options.gamma_bounds[0] > 0.0 && options.gamma_bounds[1] > options.gamma_bounds[0]) ||
                             !in(options.initial_gamma, options.gamma_bounds))) {
    throw DomainError("initial gamma must lie within valid bounds");
  }
  if (!(options.initial_gamma > 0.0)) throw DomainError("gamma must be positive");

  FitOptions opt = options;
  opt.vrs.resolution_floor_hz = dataset.resolution_floor_hz;
  const double field = dataset.zero_detuning_field ? *dataset.zero_detuning_field
                                                   : zero_detuning_field(sys, dataset.cavity.mode_omega());
  detail::FitProblem problem{dataset, sys, opt, field, {}, {}, {}, false};
  for (const VrsRow& row : dataset.rows) {
    if (dataset.censored(row)) continue;
    problem.temperatures.push_back(row.temperature);
    problem.observed_ghz.push_back(row.vrs_hz / 1e9);
    problem.sigma_ghz.push_back(row.uncertainty_hz ? *row.uncertainty_hz / 1e9 : 1.0);
    problem.weighted = problem.weighted || row.uncertainty_hz.has_value();
  }

  const Eigen::Vector2d lo{rad_s_to_ghz(opt.g0_bounds[0]),
                           opt.free_gamma ? rad_s_to_ghz(opt.gamma_bounds[0]) : rad_s_to_ghz(opt.initial_gamma)};
  const Eigen::Vector2d hi{rad_s_to_ghz(opt.g0_bounds[1]),
                           opt.free_gamma ? rad_s_to_ghz(opt.gamma_bounds[1]) : rad_s_to_ghz(opt.initial_gamma)};
  const Eigen::Vector2d start{rad_s_to_ghz(opt.initial_g0), rad_s_to_ghz(opt.initial_gamma)};

  detail::LocalFit best = detail::levenberg_marquardt(problem, start, lo, hi);
  int starts = 1;
  int total_iterations = best.iterations;
  if (!best.converged) {
    constexpr int kStarts = 5;
    for (int k = 0; k < kStarts; ++k) {
      Eigen::Vector2d p = start;
      p[0] = lo[0] + (hi[0] - lo[0]) * (k + 0.5) / kStarts;
      detail::LocalFit candidate = detail::levenberg_marquardt(problem, p, lo, hi);
      ++starts;
      total_iterations += candidate.iterations;
      const bool better = (candidate.converged && !best.converged) ||
                          (candidate.converged == best.converged && candidate.r.squaredNorm() < best.r.squaredNorm());
      if (better) best = std::move(candidate);
    }
  }

  FitResult result;
  result.g0_fit = ghz_to_rad_s(best.p[0]);
  result.gamma_fit = ghz_to_rad_s(best.p[1]);
  result.gamma_free = opt.free_gamma;
  result.objective = best.r.squaredNorm();
  result.gradient_norm = best.gradient_norm;
  result.iterations = total_iterations;
  result.starts = starts;
  result.converged = best.converged && best.p[0] >= lo[0] && best.p[0] <= hi[0];

  double weight_sum = 0.0;
  double weighted_sq = 0.0;
  std::size_t used = 0;
  for (const VrsRow& row : dataset.rows) {
    if (dataset.censored(row)) {
      result.per_point_residuals_hz.push_back(kNaN);
      continue;
    }
    const double sigma = problem.sigma_ghz[used];
    const double residual_ghz = best.r[static_cast<Eigen::Index>(used)] * sigma;
    result.per_point_residuals_hz.push_back(residual_ghz * 1e9);
    weight_sum += 1.0 / (sigma * sigma);
    weighted_sq += residual_ghz * residual_ghz / (sigma * sigma);
    ++used;
  }
  result.residual_norm_hz = std::sqrt(weighted_sq / weight_sum) * 1e9;

  // Covariance (J^T J)^-1, scaled by the reduced chi^2 unless the rows carry
  // their own uncertainties.
  const Eigen::MatrixXd jtj = best.jacobian.transpose() * best.jacobian;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
  if (lu.isInvertible()) {
    const Eigen::MatrixXd cov = lu.inverse();
    const auto m = static_cast<double>(best.r.size());
    const auto p = static_cast<double>(best.jacobian.cols());
    const double scale = problem.weighted ? 1.0 : (m > p ? result.objective / (m - p) : 0.0);
    result.g0_uncertainty = ghz_to_rad_s(std::sqrt(std::max(0.0, cov(0, 0) * scale)));
    if (opt.free_gamma) result.gamma_uncertainty = ghz_to_rad_s(std::sqrt(std::max(0.0, cov(1, 1) * scale)));
  } else {
    result.g0_uncertainty = std::numeric_limits<double>::infinity();
    if (opt.free_gamma) result.gamma_uncertainty = std::numeric_limits<double>::infinity();
  }
  return result;
}

}  // namespace zpol
