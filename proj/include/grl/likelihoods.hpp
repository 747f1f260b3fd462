#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "grl/common.hpp"
#include "grl/map_l2.hpp"

namespace grl {

struct LikelihoodTriple {
  double l_train = 0.0;
  double l_test = 0.0;
  double l_gen = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
};

/// (1/2) sum_k j*_k c^emp_k - log Z(J*). The spectral trace equals the
/// full-matrix Tr(J* C_emp) because J* is diagonal in the stored basis.
inline double train_likelihood(const MapSolution& sol) {
  return 0.5 * sol.j_star.dot(sol.c_emp) - sol.log_z();
}

/// (1/2) Tr(J* C_tr) - log Z(J*); rotates back to the original basis.
inline double test_likelihood(const MapSolution& sol,
                              const Eigen::MatrixXd& c_tr) {
  if (c_tr.rows() != sol.n())
    throw InvalidInputError("test_likelihood: dimension mismatch");
  return 0.5 * (sol.J_star.cwiseProduct(c_tr)).sum() - sol.log_z();
}

/// Likelihood of the inferred model's own samples,
///   (1/2) sum_k j*_k / (mu* - j*_k) - log Z(J*).
/// For the L2 penalty this is cross-checked against the exact identity
/// L_train - (gamma / 2 alpha) sum J*^2 (the identity does not hold for L1).
inline double gen_likelihood(const MapSolution& sol) {
  double s = 0.0;
  for (Eigen::Index k = 0; k < sol.j_star.size(); ++k)
    s += sol.j_star[k] / (sol.mu_star - sol.j_star[k]);
  const double direct = 0.5 * s - sol.log_z();
  if (sol.penalty == PenaltyKind::L2 && sol.gamma > 0.0) {
    const double via_train = train_likelihood(sol) -
                             0.5 * sol.gamma / sol.alpha * sol.frobenius_sq();
    if (std::abs(direct - via_train) > 1e-8 * (1.0 + std::abs(direct)))
      throw InvariantViolationError(
          "gen_likelihood: bias-variance identity violated");
  }
  return direct;
}

inline LikelihoodTriple likelihood_triple(const MapSolution& sol,
                                          const Eigen::MatrixXd& c_tr) {
  LikelihoodTriple t;
  t.l_train = train_likelihood(sol);
  t.l_test = test_likelihood(sol, c_tr);
  t.l_gen = gen_likelihood(sol);
  t.gamma = sol.gamma;
  t.alpha = sol.alpha;
  return t;
}

/// Diagnostic estimator of the test likelihood from a finite sample matrix
/// (p x n); the exact-C_tr form above is the reporting default.
inline double finite_test_likelihood(const MapSolution& sol,
                                     const Eigen::MatrixXd& test_data) {
  const double p = static_cast<double>(test_data.rows());
  const Eigen::MatrixXd c =
      test_data.transpose() * test_data / p;
  return 0.5 * (sol.J_star.cwiseProduct(c)).sum() - sol.log_z();
}

}  // namespace grl
