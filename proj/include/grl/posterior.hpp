#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "grl/common.hpp"
#include "grl/map_l2.hpp"
#include "grl/rng.hpp"

namespace grl {

struct PosteriorStep {
  int step = 0;
  double train_energy = 0.0;
  double test_energy = 0.0;
  double distance_to_map = 0.0;
  double acceptance_rate = 0.0;  // trailing-window rate
};

struct PosteriorTrace {
  std::vector<PosteriorStep> steps;
  double beta = 0.0;
  double final_proposal_scale = 0.0;
  int mu_solve_failures = 0;
};

struct PosteriorOptions {
  double proposal_scale = -1.0;     // < 0: default 0.02 / sqrt(n)
  double proposal_sparsity = 0.05;  // fraction of upper-triangle entries
  int record_stride = 1;
  // Adapt the proposal scale toward 30-50% acceptance over the whole run.
  // The adaptation step shrinks with time, so the chain is asymptotically a
  // fixed-scale Metropolis walk.
  bool auto_tune = true;
};

/// Metropolis-Hastings over symmetric interaction matrices at inverse
/// temperature beta, target exp(-beta E(J)) with the posterior energy of
/// map_energy. Initialization matches the MAP estimator's entrywise mean and
/// variance; proposals add sparse symmetric Gaussian perturbations. Every
/// proposal re-solves the spherical constraint for its log Z; a mu-solve
/// failure rejects the proposal and is counted on the trace.
inline PosteriorTrace metropolis_posterior(
    const Eigen::MatrixXd& c_emp, const Eigen::MatrixXd& c_tr, double alpha,
    double gamma, double beta, int steps, const MapSolution& map,
    std::uint64_t seed, const PosteriorOptions& opt = {}) {
  if (beta <= 0.0) throw InvalidInputError("metropolis_posterior: beta <= 0");
  const int n = static_cast<int>(c_emp.rows());
  Rng rng(seed);

  // init: symmetric Gaussian with the MAP's off-diagonal mean/variance,
  // diagonal matching the MAP diagonal stats
  double off_mean = 0.0, off_var = 0.0, diag_mean = 0.0, diag_var = 0.0;
  {
    int cnt = 0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        off_mean += map.J_star(i, j);
        ++cnt;
      }
    off_mean /= cnt;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        off_var += (map.J_star(i, j) - off_mean) * (map.J_star(i, j) - off_mean);
    off_var /= cnt;
    diag_mean = map.J_star.diagonal().mean();
    for (int i = 0; i < n; ++i)
      diag_var += (map.J_star(i, i) - diag_mean) * (map.J_star(i, i) - diag_mean);
    diag_var /= n;
  }
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    j(i, i) = diag_mean + std::sqrt(diag_var) * rng.gaussian();
    for (int k = i + 1; k < n; ++k) {
      const double v = off_mean + std::sqrt(off_var) * rng.gaussian();
      j(i, k) = v;
      j(k, i) = v;
    }
  }

  double scale = opt.proposal_scale > 0.0 ? opt.proposal_scale
                                          : 0.02 / std::sqrt(static_cast<double>(n));
  // diagonal entries are genuine degrees of freedom here, so proposals draw
  // from the full upper triangle including the diagonal
  const int upper = n * (n + 1) / 2;
  const int flips = std::max(1, static_cast<int>(opt.proposal_sparsity * upper));

  PosteriorTrace trace;
  trace.beta = beta;
  double e_train = map_energy(j, c_emp, alpha, gamma);
  int window_accepts = 0, window_size = 0, windows_seen = 0;
  double window_rate = 0.0;

  for (int step = 0; step < steps; ++step) {
    Eigen::MatrixXd proposal = j;
    for (int f = 0; f < flips; ++f) {
      const int idx = static_cast<int>(rng.uniform_int(upper));
      // map flat upper-triangle index (diagonal included) to (row, col)
      int row = 0, rem = idx;
      while (rem >= n - row) {
        rem -= n - row;
        ++row;
      }
      const int col = row + rem;
      const double dv = scale * rng.gaussian();
      proposal(row, col) += dv;
      if (col != row) proposal(col, row) += dv;
    }
    bool accepted = false;
    try {
      const double e_prop = map_energy(proposal, c_emp, alpha, gamma);
      const double delta = e_prop - e_train;
      if (delta <= 0.0 || rng.uniform() < std::exp(-beta * delta)) {
        j = std::move(proposal);
        e_train = e_prop;
        accepted = true;
      }
    } catch (const NoRootError&) {
      ++trace.mu_solve_failures;
    }
    ++window_size;
    if (accepted) ++window_accepts;
    if (window_size == 100) {
      window_rate = static_cast<double>(window_accepts) / window_size;
      if (opt.auto_tune) {
        const double factor = 1.0 + 0.5 / std::sqrt(1.0 + windows_seen);
        if (window_rate < 0.30) scale /= factor;
        if (window_rate > 0.50) scale *= factor;
        ++windows_seen;
      }
      window_accepts = 0;
      window_size = 0;
    }

    if (step % opt.record_stride == 0) {
      PosteriorStep rec;
      rec.step = step;
      rec.train_energy = e_train;
      rec.test_energy = map_energy(j, c_tr, alpha, gamma);
      rec.distance_to_map = (j - map.J_star).norm();
      rec.acceptance_rate = window_rate;
      trace.steps.push_back(rec);
    }
  }
  trace.final_proposal_scale = scale;
  return trace;
}

}  // namespace grl
