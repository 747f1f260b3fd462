#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <deque>
#include <vector>

#include "grl/common.hpp"
#include "grl/potts.hpp"

namespace grl {

namespace detail {

// L-BFGS with two-loop recursion and Armijo backtracking. Deterministic.
template <typename F>
double lbfgs_minimize(F&& value_and_grad, Eigen::VectorXd& x, double grad_tol,
                      int max_iter, int memory = 10) {
  const Eigen::Index dim = x.size();
  Eigen::VectorXd g(dim), g_new(dim);
  double f = value_and_grad(x, g);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;

  for (int iter = 0; iter < max_iter; ++iter) {
    if (g.norm() <= grad_tol) return f;

    // two-loop recursion
    Eigen::VectorXd q = g;
    std::vector<double> alpha(s_hist.size());
    for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (!s_hist.empty()) {
      const auto& s = s_hist.back();
      const auto& y = y_hist.back();
      q *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    Eigen::VectorXd dir = -q;
    double slope = g.dot(dir);
    if (slope >= 0.0) {  // fall back to steepest descent
      dir = -g;
      slope = -g.squaredNorm();
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }

    double t = s_hist.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    double f_new = f;
    Eigen::VectorXd x_new;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + t * dir;
      f_new = value_and_grad(x_new, g_new);
      if (f_new <= f + 1e-4 * t * slope) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) throw ConvergenceError("lbfgs: line search failed", g.norm());

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    g = g_new;
    f = f_new;
  }
  if (g.norm() > grad_tol)
    throw ConvergenceError("lbfgs: max_iter exceeded", g.norm());
  return f;
}

}  // namespace detail

/// One site's pseudo-likelihood subproblem: a multinomial logistic regression
/// of x_i on the other sites, with the directed couplings J_{i->j} as
/// parameters. Penalty convention (matching the posterior-energy scaling of
/// the Gaussian pipeline): lambda_J = n gamma / 4 per directed coupling
/// entry, lambda_h = n gamma_h / 4 per field entry, so summing the directed
/// subproblems over sites reproduces gamma/4 times the symmetric sum over
/// ordered pairs.
class PlmSiteProblem {
 public:
  PlmSiteProblem(int site, const PottsSampleSet& samples, double gamma,
                 double gamma_h)
      : site_(site),
        n_(samples.n),
        q_(samples.q),
        samples_(&samples),
        lambda_j_(0.25 * samples.n * gamma),
        lambda_h_(0.25 * samples.n * gamma_h) {}

  int dim() const { return q_ + (n_ - 1) * q_ * q_; }

  // theta layout: [h(a)] then per other-site block [J(a, b)] row-major,
  // other sites in increasing index order.
  int h_index(int a) const { return a; }
  int j_index(int other, int a, int b) const {
    const int slot = other < site_ ? other : other - 1;
    return q_ + (slot * q_ + a) * q_ + b;
  }

  double value_and_grad(const Eigen::VectorXd& theta,
                        Eigen::VectorXd& grad) const {
    grad.setZero(dim());
    double value = 0.0;
    Eigen::VectorXd f(q_), pi(q_);
    for (const auto& x : samples_->configs) {
      for (int a = 0; a < q_; ++a) {
        f[a] = theta[h_index(a)];
        for (int j = 0; j < n_; ++j)
          if (j != site_) f[a] += theta[j_index(j, a, x[j])];
      }
      const double m = f.maxCoeff();
      double z = 0.0;
      for (int a = 0; a < q_; ++a) {
        pi[a] = std::exp(f[a] - m);
        z += pi[a];
      }
      pi /= z;
      value += m + std::log(z) - f[x[site_]];
      for (int a = 0; a < q_; ++a) {
        const double r = pi[a] - (a == x[site_] ? 1.0 : 0.0);
        grad[h_index(a)] += r;
        for (int j = 0; j < n_; ++j)
          if (j != site_) grad[j_index(j, a, x[j])] += r;
      }
    }
    // L2 penalties
    for (int a = 0; a < q_; ++a) {
      value += lambda_h_ * theta[h_index(a)] * theta[h_index(a)];
      grad[h_index(a)] += 2.0 * lambda_h_ * theta[h_index(a)];
    }
    for (int i = q_; i < dim(); ++i) {
      value += lambda_j_ * theta[i] * theta[i];
      grad[i] += 2.0 * lambda_j_ * theta[i];
    }
    // normalize by sample count so the gradient tolerance is per-sample
    const double inv_p = 1.0 / samples_->configs.size();
    value *= inv_p;
    grad *= inv_p;
    return value;
  }

 private:
  int site_, n_, q_;
  const PottsSampleSet* samples_;
  double lambda_j_, lambda_h_;
};

/// Pseudo-likelihood inference with L2 penalties; per-site subproblems solved
/// independently, directed couplings symmetrized by averaging.
inline PottsParams plm_infer(const PottsSampleSet& samples, double gamma,
                             double gamma_h, double tol = 1e-4,
                             int max_iter = 1000) {
  if (samples.configs.empty())
    throw InvalidInputError("plm_infer: empty sample set");
  if (gamma <= 0.0) throw InvalidInputError("plm_infer: gamma > 0 required");
  const int n = samples.n, q = samples.q;
  PottsParams out(n, q);

  std::vector<Eigen::VectorXd> thetas(n);
  for (int i = 0; i < n; ++i) {
    PlmSiteProblem prob(i, samples, gamma, gamma_h);
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(prob.dim());
    detail::lbfgs_minimize(
        [&prob](const Eigen::VectorXd& t, Eigen::VectorXd& g) {
          return prob.value_and_grad(t, g);
        },
        theta, tol, max_iter);
    thetas[i] = std::move(theta);
  }

  for (int i = 0; i < n; ++i) {
    PlmSiteProblem prob(i, samples, gamma, gamma_h);
    for (int a = 0; a < q; ++a) out.h(i, a) = thetas[i][prob.h_index(a)];
  }
  for (int i = 0; i < n; ++i) {
    PlmSiteProblem prob_i(i, samples, gamma, gamma_h);
    for (int j = i + 1; j < n; ++j) {
      PlmSiteProblem prob_j(j, samples, gamma, gamma_h);
      Eigen::MatrixXd& block = out.blocks[out.pair_index(i, j)];
      for (int a = 0; a < q; ++a)
        for (int b = 0; b < q; ++b)
          block(a, b) = 0.5 * (thetas[i][prob_i.j_index(j, a, b)] +
                               thetas[j][prob_j.j_index(i, b, a)]);
    }
  }
  return out;
}

}  // namespace grl
