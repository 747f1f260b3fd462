#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "grl/brent.hpp"
#include "grl/common.hpp"
#include "grl/map_l2.hpp"

namespace grl {

struct LassoSolution {
  Eigen::MatrixXd precision;   // Theta, positive definite
  Eigen::MatrixXd covariance;  // W = Theta^{-1} as tracked by the solver
  double gamma1 = 0.0;
  double dual_gap = 0.0;  // max |Delta W| of the last sweep
  int iterations = 0;
  // log det W after each sweep; block coordinate ascent on the dual makes
  // this non-decreasing.
  std::vector<double> objective_trace;
};

inline double soft_threshold(double x, double t) {
  if (x > t) return x - t;
  if (x < -t) return x + t;
  return 0.0;
}

/// Graphical lasso: maximizes log det Theta - Tr(S Theta) - gamma1 sum_{i!=j}
/// |Theta_ij| by block coordinate descent over columns, each column solved by
/// cyclic coordinate-descent lasso. The diagonal is unpenalized, so W_ii =
/// S_ii throughout.
inline LassoSolution graphical_lasso(const Eigen::MatrixXd& s, double gamma1,
                                     double tol = 1e-8, int max_iter = 500) {
  const int n = static_cast<int>(s.rows());
  if (s.cols() != n) throw InvalidInputError("graphical_lasso: S not square");
  if ((s - s.transpose()).cwiseAbs().maxCoeff() > 1e-10 * (1.0 + s.cwiseAbs().maxCoeff()))
    throw InvalidInputError("graphical_lasso: S not symmetric");
  if (gamma1 < 0.0) throw InvalidInputError("graphical_lasso: gamma1 < 0");
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
    if (es.eigenvalues().minCoeff() < -1e-10 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff()))
      throw InvalidInputError("graphical_lasso: S not positive semi-definite");
  }
  if (s.diagonal().minCoeff() <= 0.0)
    throw InvalidInputError("graphical_lasso: diagonal must be positive");

  LassoSolution sol;
  sol.gamma1 = gamma1;
  Eigen::MatrixXd w = s;  // working covariance estimate, W_ii = S_ii
  Eigen::MatrixXd beta = Eigen::MatrixXd::Zero(n, n);  // column j: lasso coefs

  const double scale = s.cwiseAbs().maxCoeff() + 1.0;
  const double inner_tol = std::min(tol, 1e-10) * scale;

  double max_change = 0.0;
  int sweep = 0;
  for (; sweep < max_iter; ++sweep) {
    max_change = 0.0;
    for (int j = 0; j < n; ++j) {
      // lasso for column j against W11 (W with row/col j removed)
      for (int pass = 0; pass < 1000; ++pass) {
        double delta = 0.0;
        for (int k = 0; k < n; ++k) {
          if (k == j) continue;
          double r = s(k, j);
          for (int l = 0; l < n; ++l) {
            if (l == j || l == k) continue;
            r -= w(k, l) * beta(l, j);
          }
          const double updated = soft_threshold(r, gamma1) / w(k, k);
          delta = std::max(delta, std::abs(updated - beta(k, j)));
          beta(k, j) = updated;
        }
        if (delta < inner_tol) break;
      }
      // w12 = W11 * beta
      for (int k = 0; k < n; ++k) {
        if (k == j) continue;
        double v = 0.0;
        for (int l = 0; l < n; ++l) {
          if (l == j) continue;
          v += w(k, l) * beta(l, j);
        }
        max_change = std::max(max_change, std::abs(w(k, j) - v));
        w(k, j) = v;
        w(j, k) = v;
      }
    }
    sol.objective_trace.push_back(std::log(w.determinant()));
    if (max_change < tol * scale) break;
  }
  sol.iterations = sweep + 1;
  sol.dual_gap = max_change;
  if (max_change >= tol * scale) {
    ConvergenceError err("graphical_lasso: did not converge", max_change);
    throw err;
  }

  // Recover Theta from the final (W, beta) blocks and symmetrize.
  Eigen::MatrixXd theta = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    double wb = 0.0;
    for (int k = 0; k < n; ++k)
      if (k != j) wb += w(k, j) * beta(k, j);
    const double theta_jj = 1.0 / (w(j, j) - wb);
    theta(j, j) = theta_jj;
    for (int k = 0; k < n; ++k)
      if (k != j) theta(k, j) = -beta(k, j) * theta_jj;
  }
  sol.precision = 0.5 * (theta + theta.transpose());
  sol.covariance = std::move(w);
  return sol;
}

/// Embeds the lasso precision matrix into the spherical-model convention:
/// the penalty is applied at effective strength gamma1 / alpha, the spectrum
/// of Theta is shifted so that the model covariance has trace n, and the
/// residual gauge is pinned by Tr(J*) = 0. The returned solution carries
/// PenaltyKind::L1, so the L2 quadratic identity is not asserted on it.
inline MapSolution map_l1(const Eigen::MatrixXd& c_emp, double alpha,
                          double gamma1, double tol = 1e-8,
                          int max_iter = 500) {
  if (alpha <= 0.0) throw InvalidInputError("map_l1: alpha <= 0");
  const LassoSolution lasso =
      graphical_lasso(c_emp, gamma1 / alpha, tol, max_iter);
  const EigenDecomposition ed = eigensym_descending(lasso.precision);
  const Eigen::Index n = ed.values.size();
  const double theta_min = ed.values.minCoeff();
  if (theta_min <= 0.0)
    throw DegenerateError("map_l1: precision matrix not positive definite");

  // shift s with sum_k 1/(theta_k + s) = n; g(s) decreases from +inf to 0
  const auto g = [&](double shift) {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) acc += 1.0 / (ed.values[k] + shift);
    return acc - static_cast<double>(n);
  };
  double lo = -theta_min + 1e-12 * (1.0 + theta_min);
  while (g(lo) < 0.0) lo = -theta_min + 0.5 * (lo + theta_min);
  double hi = lo, step = 1.0 + theta_min;
  while (g(hi) > 0.0) {
    hi += step;
    step *= 2.0;
  }
  const double shift = brent_root(g, lo, hi, 1e-13);

  MapSolution sol;
  sol.penalty = PenaltyKind::L1;
  sol.alpha = alpha;
  sol.gamma = gamma1;
  sol.basis = ed.vectors;
  sol.mu_star = (ed.values.array() + shift).mean();  // Tr(J*) = 0 gauge
  sol.j_star = sol.mu_star - (ed.values.array() + shift);
  sol.c_emp = (ed.vectors.transpose() * c_emp * ed.vectors).diagonal();
  sol.J_star = ed.vectors * sol.j_star.asDiagonal() * ed.vectors.transpose();
  return sol;
}

}  // namespace grl
