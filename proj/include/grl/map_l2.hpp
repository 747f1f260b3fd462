#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "grl/brent.hpp"
#include "grl/common.hpp"
#include "grl/spherical.hpp"

namespace grl {

enum class PenaltyKind { L2, L1 };

/// Solution of the regularized MAP problem. For the L2 penalty j_star is
/// paired index-wise with the descending eigenvalues of C_emp; for the L1
/// route (see lasso.hpp) the basis diagonalizes the lasso precision matrix
/// instead and c_emp holds the projected diagonal of C_emp in that basis.
struct MapSolution {
  Eigen::VectorXd c_emp;
  Eigen::VectorXd j_star;
  double mu_star = 0.0;
  Eigen::MatrixXd basis;
  Eigen::MatrixXd J_star;
  double gamma = 0.0;
  double alpha = 0.0;
  PenaltyKind penalty = PenaltyKind::L2;

  int n() const { return static_cast<int>(j_star.size()); }
  double frobenius_sq() const { return j_star.squaredNorm(); }
  double log_z() const { return log_partition(j_star, mu_star); }
};

/// Minus branch of gamma j^2 - (gamma mu + alpha c) j + alpha (mu c - 1) = 0,
/// written in the cancellation-free product form
///   j*(c) = 2 alpha (mu c - 1) / (alpha c + gamma mu + D),
/// D = sqrt((alpha c - gamma mu)^2 + 4 alpha gamma).
inline double inferred_eigenvalue(double c_emp, double mu, double alpha,
                                  double gamma) {
  if (alpha <= 0.0) throw InvalidInputError("inferred_eigenvalue: alpha <= 0");
  if (gamma < 0.0) throw InvalidInputError("inferred_eigenvalue: gamma < 0");
  if (gamma == 0.0) {
    // unregularized limit
    if (c_emp == 0.0)
      throw InvalidInputError("inferred_eigenvalue: gamma = 0 needs c != 0");
    return mu - 1.0 / c_emp;
  }
  const double d =
      std::sqrt((alpha * c_emp - gamma * mu) * (alpha * c_emp - gamma * mu) +
                4.0 * alpha * gamma);
  return 2.0 * alpha * (mu * c_emp - 1.0) / (alpha * c_emp + gamma * mu + d);
}

/// Normalization residual 1 - (1/n) sum_k 1/(mu - j*(c_k, mu)); strictly
/// increasing in mu with range (-inf, 1).
inline double norm_residual(double mu, const Eigen::VectorXd& c_emp,
                            double alpha, double gamma) {
  const double n = static_cast<double>(c_emp.size());
  double s = 0.0;
  for (Eigen::Index k = 0; k < c_emp.size(); ++k)
    s += 1.0 / (mu - inferred_eigenvalue(c_emp[k], mu, alpha, gamma));
  return 1.0 - s / n;
}

namespace detail {

// Root of norm_residual over the whole real line (the residual is monotone
// from -inf to 1), by two-sided geometric bracket expansion.
inline double solve_mu_star(const Eigen::VectorXd& c_emp, double alpha,
                            double gamma, double tol) {
  const auto f = [&](double mu) { return norm_residual(mu, c_emp, alpha, gamma); };
  double lo = 0.0, hi = 1.0;
  double step = 1.0 + c_emp.cwiseAbs().maxCoeff();
  int guard = 0;
  while (f(hi) < 0.0) {
    hi += step;
    step *= 2.0;
    if (++guard > 200) throw NoRootError("solve_mu_star: no upper bracket");
  }
  step = 1.0 + c_emp.cwiseAbs().maxCoeff();
  guard = 0;
  while (f(lo) > 0.0) {
    lo -= step;
    step *= 2.0;
    if (++guard > 200) throw NoRootError("solve_mu_star: no lower bracket");
  }
  return brent_root(f, lo, hi, tol);
}

}  // namespace detail

/// MAP solve in the eigenbasis of C_emp: descending eigendecomposition,
/// Brent root for mu*, per-eigenvalue closed form, basis reconstruction.
/// The decomposition may be precomputed once and shared across gamma values.
inline MapSolution solve_map_spectral(const EigenDecomposition& ed,
                                      double alpha, double gamma,
                                      double tol = 1e-12) {
  MapSolution sol;
  sol.c_emp = ed.values;
  sol.basis = ed.vectors;
  sol.alpha = alpha;
  sol.gamma = gamma;
  const Eigen::Index n = ed.values.size();

  if (gamma == 0.0) {
    // Unregularized MLE: J* = mu I - C_emp^{-1}. The normalization fixes no
    // mu here (it reduces to Tr(C_emp) = n, a property of the input), so the
    // input must be invertible and trace-n; mu is a pure gauge and we pin it
    // by Tr(J*) = 0.
    if (ed.values.minCoeff() <= 0.0)
      throw InvalidInputError("solve_map: gamma = 0 requires invertible C_emp");
    if (std::abs(ed.values.sum() - static_cast<double>(n)) >
        1e-6 * static_cast<double>(n))
      throw InvalidInputError("solve_map: gamma = 0 requires Tr(C_emp) = n");
    const double mu = ed.values.cwiseInverse().sum() / static_cast<double>(n);
    sol.mu_star = mu;
    sol.j_star = mu - ed.values.cwiseInverse().array();
  } else {
    sol.mu_star = detail::solve_mu_star(ed.values, alpha, gamma, tol);
    sol.j_star.resize(n);
    for (Eigen::Index k = 0; k < n; ++k)
      sol.j_star[k] = inferred_eigenvalue(ed.values[k], sol.mu_star, alpha, gamma);
  }
  sol.J_star = sol.basis * sol.j_star.asDiagonal() * sol.basis.transpose();
  return sol;
}

inline MapSolution solve_map(const Eigen::MatrixXd& c_emp_matrix, double alpha,
                             double gamma, double tol = 1e-12) {
  if (c_emp_matrix.rows() != c_emp_matrix.cols())
    throw InvalidInputError("solve_map: C_emp not square");
  return solve_map_spectral(eigensym_descending(c_emp_matrix), alpha, gamma,
                            tol);
}

/// Posterior energy of an interaction matrix:
///   E(J) = -(alpha/2) Tr(J C) + alpha log Z(J) + (gamma/4) Tr(J^2),
/// with log Z re-solved through the spherical constraint for this J.
inline double map_energy(const Eigen::MatrixXd& J, const Eigen::MatrixXd& C,
                         double alpha, double gamma, double mu_tol = 1e-12) {
  EigenDecomposition ed = eigensym_descending(J);
  const double mu = solve_lagrange_multiplier(ed.values, mu_tol);
  return -0.5 * alpha * (J.cwiseProduct(C)).sum() +
         alpha * log_partition(ed.values, mu) + 0.25 * gamma * J.squaredNorm();
}

}  // namespace grl
