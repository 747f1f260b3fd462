#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "grl/brent.hpp"
#include "grl/common.hpp"
#include "grl/rng.hpp"

namespace grl {

// Spectrum sorted descending with the matching eigenvector permutation.
struct EigenDecomposition {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns paired with values
};

inline EigenDecomposition eigensym_descending(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  if (solver.info() != Eigen::Success)
    throw InvalidInputError("symmetric eigendecomposition failed");
  const auto n = m.rows();
  EigenDecomposition d;
  d.values.resize(n);
  d.vectors.resize(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    d.values[k] = solver.eigenvalues()[n - 1 - k];
    d.vectors.col(k) = solver.eigenvectors().col(n - 1 - k);
  }
  return d;
}

/// Symmetric coupling matrix with lazily cached spectrum.
class InteractionMatrix {
 public:
  InteractionMatrix() = default;
  explicit InteractionMatrix(Eigen::MatrixXd entries)
      : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols())
      throw InvalidInputError("InteractionMatrix: non-square entries");
  }

  int n() const { return static_cast<int>(entries_.rows()); }
  const Eigen::MatrixXd& entries() const { return entries_; }

  const Eigen::VectorXd& spectrum() const {
    ensure_decomposition();
    return decomposition_->values;
  }
  const Eigen::MatrixXd& basis() const {
    ensure_decomposition();
    return decomposition_->vectors;
  }

  double frobenius_sq() const { return entries_.squaredNorm(); }

 private:
  void ensure_decomposition() const {
    if (!decomposition_) decomposition_ = eigensym_descending(entries_);
  }

  Eigen::MatrixXd entries_;
  mutable std::optional<EigenDecomposition> decomposition_;
};

struct SphericalModel {
  InteractionMatrix interaction;
  double mu = 0.0;
  Eigen::MatrixXd covariance;  // (mu I - J)^{-1}, trace n
};

/// Unique mu in (max_k j_k, +inf) with (1/n) sum_k 1/(mu - j_k) = 1.
/// Bracket starts just above the top eigenvalue and doubles upward until the
/// residual changes sign.
inline double solve_lagrange_multiplier(const Eigen::VectorXd& eigenvalues,
                                        double tol = 1e-12,
                                        double bracket_cap_factor = 1e6) {
  if (eigenvalues.size() == 0 || !eigenvalues.allFinite())
    throw InvalidInputError("solve_lagrange_multiplier: non-finite input");
  if (tol <= 0.0) throw InvalidInputError("solve_lagrange_multiplier: tol <= 0");

  const double jmax = eigenvalues.maxCoeff();
  const double jmin = eigenvalues.minCoeff();
  const double n = static_cast<double>(eigenvalues.size());
  const auto residual = [&](double mu) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < eigenvalues.size(); ++k)
      s += 1.0 / (mu - eigenvalues[k]);
    return 1.0 - s / n;
  };

  const double lo = jmax + 1e-9 * (1.0 + std::abs(jmax));
  double spread = jmax - jmin;
  if (spread == 0.0) spread = 1.0 + std::abs(jmax);
  const double cap = bracket_cap_factor * spread;

  double step = spread;
  double hi = jmax + step;
  while (residual(hi) < 0.0) {
    step *= 2.0;
    hi = jmax + step;
    if (step > cap)
      throw NoRootError("solve_lagrange_multiplier: bracket expansion cap hit");
  }
  return brent_root(residual, lo, hi, tol);
}

/// log Z of the spherical model: n mu / 2 - (1/2) sum_k log(mu - j_k).
inline double log_partition(const Eigen::VectorXd& spectrum, double mu) {
  if (mu <= spectrum.maxCoeff())
    throw InvalidInputError("log_partition: mu <= max eigenvalue");
  double s = 0.0;
  for (Eigen::Index k = 0; k < spectrum.size(); ++k)
    s += std::log(mu - spectrum[k]);
  return 0.5 * static_cast<double>(spectrum.size()) * mu - 0.5 * s;
}

/// Builds (J, mu, (mu I - J)^{-1}) with Tr(C) = n, inverting in the eigenbasis.
inline SphericalModel covariance_from_interaction(InteractionMatrix J,
                                                  double tol = 1e-12) {
  const Eigen::VectorXd& spec = J.spectrum();
  const Eigen::MatrixXd& basis = J.basis();
  const double mu = solve_lagrange_multiplier(spec, tol);
  Eigen::VectorXd inv = (mu - spec.array()).inverse().matrix();
  Eigen::MatrixXd cov = basis * inv.asDiagonal() * basis.transpose();
  return SphericalModel{std::move(J), mu, std::move(cov)};
}

/// GOE couplings: off-diagonal N(0, sigma/sqrt(n)), zero diagonal, symmetric.
inline InteractionMatrix generate_goe(int n, double sigma,
                                      std::uint64_t seed) {
  if (n < 2 || sigma <= 0.0)
    throw InvalidInputError("generate_goe: need n >= 2, sigma > 0");
  Rng rng(seed);
  const double sd = sigma / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double v = sd * rng.gaussian();
      m(i, j) = v;
      m(j, i) = v;
    }
  return InteractionMatrix(std::move(m));
}

inline int circular_distance(int i, int j, int n) {
  const int d = std::abs(i - j) % n;
  return std::min(d, n - d);
}

/// Circular band matrix: entries with circular distance strictly below w/2
/// are N(0, sigma/sqrt(w)); (1/n) sum J^2 is w-independent by construction.
inline InteractionMatrix generate_band(int n, int w, double sigma,
                                       std::uint64_t seed) {
  if (w < 1 || w >= n) throw InvalidInputError("generate_band: need 1 <= w < n");
  if (sigma <= 0.0) throw InvalidInputError("generate_band: sigma > 0 required");
  Rng rng(seed);
  const double sd = sigma / std::sqrt(static_cast<double>(w));
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (2 * circular_distance(i, j, n) < w) {
        const double v = sd * rng.gaussian();
        m(i, j) = v;
        m(j, i) = v;
      }
    }
  return InteractionMatrix(std::move(m));
}

/// Uniform ring chain: J_ij = sigma iff circular distance 1.
inline InteractionMatrix generate_ring_chain(int n, double sigma) {
  if (n < 3) throw InvalidInputError("generate_ring_chain: need n >= 3");
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    m(i, (i + 1) % n) = sigma;
    m((i + 1) % n, i) = sigma;
  }
  return InteractionMatrix(std::move(m));
}

}  // namespace grl
