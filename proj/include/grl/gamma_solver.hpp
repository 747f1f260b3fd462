#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "grl/brent.hpp"
#include "grl/common.hpp"
#include "grl/likelihoods.hpp"
#include "grl/map_l2.hpp"
#include "grl/sampling.hpp"

namespace grl {

/// Shared, immutable context for a gamma scan: the eigendecomposition of
/// C_emp is computed once, and C_tr is rotated into that basis so that every
/// per-gamma quantity reduces to O(n) spectral sums.
struct GammaContext {
  Eigen::MatrixXd c_emp_matrix;
  Eigen::MatrixXd c_tr_matrix;
  double alpha = 0.0;
  EigenDecomposition ed;          // of C_emp, descending
  Eigen::VectorXd c_tr_rot_diag;  // diag(V^T C_tr V)
  double mu_tol = 1e-12;
};

inline GammaContext make_gamma_context(Eigen::MatrixXd c_emp,
                                       Eigen::MatrixXd c_tr, double alpha) {
  GammaContext ctx;
  ctx.ed = eigensym_descending(c_emp);
  ctx.c_tr_rot_diag =
      (ctx.ed.vectors.transpose() * c_tr * ctx.ed.vectors).diagonal();
  ctx.c_emp_matrix = std::move(c_emp);
  ctx.c_tr_matrix = std::move(c_tr);
  ctx.alpha = alpha;
  return ctx;
}

// (j*, mu*) at one gamma, without materializing J* in the original basis.
struct SpectralSolution {
  Eigen::VectorXd j;
  double mu = 0.0;
};

inline SpectralSolution solve_spectral(const GammaContext& ctx, double gamma) {
  if (gamma <= 0.0) throw InvalidInputError("solve_spectral: gamma <= 0");
  SpectralSolution s;
  s.mu = detail::solve_mu_star(ctx.ed.values, ctx.alpha, gamma, ctx.mu_tol);
  s.j.resize(ctx.ed.values.size());
  for (Eigen::Index k = 0; k < s.j.size(); ++k)
    s.j[k] = inferred_eigenvalue(ctx.ed.values[k], s.mu, ctx.alpha, gamma);
  return s;
}

inline LikelihoodTriple triple_at(const GammaContext& ctx, double gamma) {
  const SpectralSolution s = solve_spectral(ctx, gamma);
  const double log_z = log_partition(s.j, s.mu);
  LikelihoodTriple t;
  t.gamma = gamma;
  t.alpha = ctx.alpha;
  t.l_train = 0.5 * s.j.dot(ctx.ed.values) - log_z;
  t.l_test = 0.5 * s.j.dot(ctx.c_tr_rot_diag) - log_z;
  t.l_gen = t.l_train - 0.5 * gamma / ctx.alpha * s.j.squaredNorm();
  return t;
}

/// Res^cross(gamma) = alpha sum J*(C_emp - C_tr) / sum J*^2 - gamma.
inline double cross_residual(const GammaContext& ctx, double gamma) {
  const SpectralSolution s = solve_spectral(ctx, gamma);
  const double frob_sq = s.j.squaredNorm();
  if (frob_sq == 0.0)
    throw DegenerateError("cross_residual: J* vanished");
  const double num = s.j.dot(ctx.ed.values - ctx.c_tr_rot_diag);
  return ctx.alpha * num / frob_sq - gamma;
}

/// Per-eigenvalue pieces of the dL_test/dgamma chain.
struct DerivativeWorkspace {
  Eigen::VectorXd d;   // D_k = sqrt((alpha c_k - gamma mu)^2 + 4 alpha gamma)
  Eigen::VectorXd a;   // A_k in [0, 1]
  Eigen::VectorXd b;   // B_k
  Eigen::VectorXd dj;  // d j*_k / d gamma (total)
  double d_mu_d_gamma = 0.0;
};

inline DerivativeWorkspace derivative_workspace(const Eigen::VectorXd& c_emp,
                                                const Eigen::VectorXd& j,
                                                double mu, double alpha,
                                                double gamma) {
  const Eigen::Index n = c_emp.size();
  DerivativeWorkspace w;
  w.d.resize(n);
  w.a.resize(n);
  w.b.resize(n);
  w.dj.resize(n);
  Eigen::VectorXd dj_fixed_mu(n);  // B_k - j_k / gamma
  double num = 0.0, den = 0.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    const double t = alpha * c_emp[k] - gamma * mu;
    w.d[k] = std::sqrt(t * t + 4.0 * alpha * gamma);
    w.a[k] = 0.5 * (1.0 + t / w.d[k]);
    w.b[k] = (mu * w.a[k] - alpha / w.d[k]) / gamma;
    dj_fixed_mu[k] = w.b[k] - j[k] / gamma;
    const double g = 1.0 / ((mu - j[k]) * (mu - j[k]));
    num += dj_fixed_mu[k] * g;
    den += (1.0 - w.a[k]) * g;
  }
  w.d_mu_d_gamma = num / den;
  for (Eigen::Index k = 0; k < n; ++k)
    w.dj[k] = w.a[k] * w.d_mu_d_gamma + dj_fixed_mu[k];
  return w;
}

/// Res^opt(gamma) = dL_test/dgamma. The log Z derivative collapses, through
/// the normalization condition, to (1/2) sum_k dj_k / (mu - j_k).
inline double opt_residual(const GammaContext& ctx, double gamma) {
  if (gamma <= 0.0) throw InvalidInputError("opt_residual: gamma <= 0");
  const SpectralSolution s = solve_spectral(ctx, gamma);
  const DerivativeWorkspace w =
      derivative_workspace(ctx.ed.values, s.j, s.mu, ctx.alpha, gamma);
  double d_log_z = 0.0;
  for (Eigen::Index k = 0; k < s.j.size(); ++k)
    d_log_z += w.dj[k] / (s.mu - s.j[k]);
  d_log_z *= 0.5;
  return 0.5 * w.dj.dot(ctx.c_tr_rot_diag) - d_log_z;
}

inline std::vector<double> log_gamma_grid(double lo = 1e-3, double hi = 1e3,
                                          int points = 61) {
  std::vector<double> g(points);
  const double l0 = std::log(lo), l1 = std::log(hi);
  for (int i = 0; i < points; ++i)
    g[i] = std::exp(l0 + (l1 - l0) * i / (points - 1));
  return g;
}

struct RootDiagnostics {
  int bracket_count = 0;  // > 1 means a multiplicity warning applies
};

namespace detail {

template <typename F>
std::optional<double> refine_first_bracket(F&& f, const std::vector<double>& grid,
                                           const std::vector<double>& values,
                                           int preferred_index,
                                           RootDiagnostics* diag) {
  // Collect all sign-change brackets, then pick per policy: the one nearest
  // preferred_index when given, otherwise the smallest-gamma bracket.
  std::vector<int> brackets;
  for (std::size_t i = 0; i + 1 < values.size(); ++i)
    if (values[i] == 0.0 || values[i] * values[i + 1] < 0.0)
      brackets.push_back(static_cast<int>(i));
  if (diag) diag->bracket_count = static_cast<int>(brackets.size());
  if (brackets.empty()) return std::nullopt;
  int pick = brackets.front();
  if (preferred_index >= 0) {
    int best_dist = std::numeric_limits<int>::max();
    for (int b : brackets) {
      const int dist = std::abs(b - preferred_index);
      if (dist < best_dist) {
        best_dist = dist;
        pick = b;
      }
    }
  }
  return brent_root(f, grid[pick], grid[pick + 1], 1e-12);
}

}  // namespace detail

/// Root of Res^cross on the scan grid (smallest-gamma bracket). A missing
/// bracket is a legitimate outcome: the likelihoods never cross.
inline std::optional<double> find_gamma_cross(
    const GammaContext& ctx, const std::vector<double>& grid = log_gamma_grid(),
    RootDiagnostics* diag = nullptr) {
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i)
    vals[i] = cross_residual(ctx, grid[i]);
  return detail::refine_first_bracket(
      [&](double g) { return cross_residual(ctx, g); }, grid, vals, -1, diag);
}

/// Root of Res^opt, seeded by the grid argmax of L_test.
inline std::optional<double> find_gamma_opt(
    const GammaContext& ctx, const std::vector<double>& grid = log_gamma_grid(),
    RootDiagnostics* diag = nullptr) {
  std::vector<double> vals(grid.size());
  std::vector<double> l_test(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    vals[i] = opt_residual(ctx, grid[i]);
    l_test[i] = triple_at(ctx, grid[i]).l_test;
  }
  const int argmax = static_cast<int>(
      std::max_element(l_test.begin(), l_test.end()) - l_test.begin());
  return detail::refine_first_bracket(
      [&](double g) { return opt_residual(ctx, g); }, grid, vals, argmax, diag);
}

/// Root of l_gen - (l_train + l_test) / 2.
inline std::optional<double> find_gamma_half(
    const GammaContext& ctx, const std::vector<double>& grid = log_gamma_grid(),
    RootDiagnostics* diag = nullptr) {
  const auto f = [&](double g) {
    const LikelihoodTriple t = triple_at(ctx, g);
    return t.l_gen - 0.5 * (t.l_train + t.l_test);
  };
  std::vector<double> vals(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) vals[i] = f(grid[i]);
  return detail::refine_first_bracket(f, grid, vals, -1, diag);
}

/// Relative mismatch |sum J* C_tr - sum J_tr C*| / |sum J* C_tr| at a given
/// gamma (logged as a diagnostic at gamma_half, never asserted).
inline double gamma_half_diagnostic(const GammaContext& ctx,
                                    const Eigen::MatrixXd& j_tr,
                                    double gamma) {
  const SpectralSolution s = solve_spectral(ctx, gamma);
  const Eigen::MatrixXd j_star =
      ctx.ed.vectors * s.j.asDiagonal() * ctx.ed.vectors.transpose();
  const Eigen::VectorXd c_star_eigs = (s.mu - s.j.array()).inverse().matrix();
  const Eigen::MatrixXd c_star =
      ctx.ed.vectors * c_star_eigs.asDiagonal() * ctx.ed.vectors.transpose();
  const double lhs = (j_star.cwiseProduct(ctx.c_tr_matrix)).sum();
  const double rhs = (j_tr.cwiseProduct(c_star)).sum();
  return std::abs(lhs - rhs) / std::abs(lhs);
}

struct GammaPrediction {
  double value = std::numeric_limits<double>::infinity();
  bool finite = false;
};

/// High-sampling prediction gamma^cross = n / sum_ij (J_tr)^2.
inline GammaPrediction predict_gamma_cross_infinite(
    const InteractionMatrix& j_tr) {
  const double frob_sq = j_tr.frobenius_sq();
  if (frob_sq == 0.0) return GammaPrediction{};
  return GammaPrediction{static_cast<double>(j_tr.n()) / frob_sq, true};
}

/// theta = (1/n) u^T C_tr u for a unit vector u.
inline double overlap_theta(const Eigen::VectorXd& u,
                            const Eigen::MatrixXd& c_tr) {
  if (std::abs(u.norm() - 1.0) > 1e-10)
    throw InvalidInputError("overlap_theta: u is not a unit vector");
  return u.dot(c_tr * u) / static_cast<double>(u.size());
}

enum class SigmaRegime { Disordered, Ferro };

/// Single-sample (alpha = 1/n) closed forms; nullopt means the test and
/// generated likelihoods never cross and the null model wins.
inline std::optional<double> small_alpha_prediction(double theta, int n,
                                                    SigmaRegime regime) {
  if (theta <= 0.0 || theta > 1.0)
    throw InvalidInputError("small_alpha_prediction: theta out of (0, 1]");
  if (regime == SigmaRegime::Ferro) return (1.0 - theta) * (1.0 - theta);
  const double nt = static_cast<double>(n) * theta;
  if (nt <= 1.0) return std::nullopt;
  return nt / (nt - 1.0);
}

struct GammaScanRow {
  double gamma = 0.0;
  LikelihoodTriple likelihoods;
  double mu_star = 0.0;
  double frobenius_sq = 0.0;
};

struct GammaScan {
  std::vector<GammaScanRow> grid;
  std::optional<double> gamma_opt;
  std::optional<double> gamma_cross;
  std::optional<double> gamma_half;
  std::optional<double> theta;
};

inline GammaScan scan_gammas(const GammaContext& ctx,
                             const std::vector<double>& grid = log_gamma_grid()) {
  GammaScan scan;
  scan.grid.reserve(grid.size());
  for (double g : grid) {
    const SpectralSolution s = solve_spectral(ctx, g);
    GammaScanRow row;
    row.gamma = g;
    row.mu_star = s.mu;
    row.frobenius_sq = s.j.squaredNorm();
    const double log_z = log_partition(s.j, s.mu);
    row.likelihoods.gamma = g;
    row.likelihoods.alpha = ctx.alpha;
    row.likelihoods.l_train = 0.5 * s.j.dot(ctx.ed.values) - log_z;
    row.likelihoods.l_test = 0.5 * s.j.dot(ctx.c_tr_rot_diag) - log_z;
    row.likelihoods.l_gen =
        row.likelihoods.l_train - 0.5 * g / ctx.alpha * row.frobenius_sq;
    scan.grid.push_back(row);
  }
  scan.gamma_opt = find_gamma_opt(ctx, grid);
  scan.gamma_cross = find_gamma_cross(ctx, grid);
  scan.gamma_half = find_gamma_half(ctx, grid);
  return scan;
}

}  // namespace grl
