#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "grl/common.hpp"
#include "grl/rng.hpp"
#include "grl/spherical.hpp"

namespace grl {

struct SampleSet {
  int p = 0;
  int n = 0;
  Eigen::MatrixXd data;  // p x n, one sample per row
  double alpha = 0.0;    // p / n
};

/// Draws p i.i.d. centered Gaussian rows with the model covariance, through
/// the eigen square-root (Cholesky breaks down for near-singular covariances
/// in the condensed phase). Row k uses substream (seed, k).
inline SampleSet sample_gaussian(const SphericalModel& model, int p,
                                 std::uint64_t seed) {
  if (p < 1) throw InvalidInputError("sample_gaussian: p >= 1 required");
  const int n = model.interaction.n();
  EigenDecomposition cd = eigensym_descending(model.covariance);
  const double scale = std::max(1.0, cd.values.cwiseAbs().maxCoeff());
  Eigen::VectorXd roots(n);
  for (int k = 0; k < n; ++k) {
    double v = cd.values[k];
    if (v < -1e-8 * scale)
      throw InvalidInputError("sample_gaussian: covariance not PSD");
    roots[k] = std::sqrt(std::max(v, 0.0));
  }
  Eigen::MatrixXd sqrt_cov =
      cd.vectors * roots.asDiagonal() * cd.vectors.transpose();

  SampleSet s;
  s.p = p;
  s.n = n;
  s.alpha = static_cast<double>(p) / n;
  s.data.resize(p, n);
  for (int k = 0; k < p; ++k) {
    Rng row_rng = Rng::substream(seed, static_cast<std::uint64_t>(k));
    Eigen::VectorXd z(n);
    for (int i = 0; i < n; ++i) z[i] = row_rng.gaussian();
    s.data.row(k) = (sqrt_cov * z).transpose();
  }
  return s;
}

/// C_ij = (1/p) sum_k x^k_i x^k_j; the model is centered, no mean subtraction.
inline Eigen::MatrixXd empirical_covariance(const SampleSet& s) {
  return s.data.transpose() * s.data / static_cast<double>(s.p);
}

/// Rescales C so that Tr(C) = n exactly.
inline Eigen::MatrixXd rescale_trace(const Eigen::MatrixXd& c, int n) {
  const double tr = c.trace();
  if (tr <= 0.0) throw InvalidInputError("rescale_trace: trace <= 0");
  return c * (static_cast<double>(n) / tr);
}

}  // namespace grl
