#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "grl/common.hpp"
#include "grl/rng.hpp"

namespace grl {

/// Pairwise Potts model on n sites with q states. Coupling blocks are stored
/// once per unordered pair (i < j); symmetric access transposes the block.
/// Ground-truth models carry their ER edge list; inferred models are dense.
struct PottsParams {
  int n = 0;
  int q = 0;
  Eigen::MatrixXd h;                      // n x q
  std::vector<Eigen::MatrixXd> blocks;    // q x q per pair i < j
  std::vector<std::pair<int, int>> edges; // ground-truth connectivity

  PottsParams() = default;
  PottsParams(int n_, int q_) : n(n_), q(q_) {
    h = Eigen::MatrixXd::Zero(n, q);
    blocks.assign(static_cast<std::size_t>(n) * (n - 1) / 2,
                  Eigen::MatrixXd::Zero(q, q));
  }

  int pair_index(int i, int j) const {  // requires i < j
    return i * n - i * (i + 1) / 2 + (j - i - 1);
  }
  double coupling(int i, int j, int a, int b) const {
    return i < j ? blocks[pair_index(i, j)](a, b)
                 : blocks[pair_index(j, i)](b, a);
  }
  double& coupling_ref(int i, int j, int a, int b) {
    return i < j ? blocks[pair_index(i, j)](a, b)
                 : blocks[pair_index(j, i)](b, a);
  }
  std::size_t parameter_count() const {
    return static_cast<std::size_t>(n) * q +
           static_cast<std::size_t>(n) * (n - 1) / 2 * q * q;
  }
  double coupling_frobenius_sq() const {
    double s = 0.0;
    for (const auto& b : blocks) s += b.squaredNorm();
    return s;
  }
};

using PottsConfig = std::vector<int>;

struct PottsSampleSet {
  std::vector<PottsConfig> configs;
  int n = 0;
  int q = 0;
  std::uint64_t seed = 0;
  int burn_in = 0;
  int thinning = 0;
};

/// ER graph with edge probability d/n; h ~ N(0, sigma_h), block entries
/// N(0, sigma_j) on edges. Note the sigma arguments are standard deviations.
inline PottsParams generate_er_potts(int n, int q, double d, double sigma_h,
                                     double sigma_j, std::uint64_t seed) {
  if (d < 0.0 || d >= n)
    throw InvalidInputError("generate_er_potts: need 0 <= d < n");
  PottsParams p(n, q);
  Rng rng(seed);
  for (int i = 0; i < n; ++i)
    for (int a = 0; a < q; ++a) p.h(i, a) = sigma_h * rng.gaussian();
  const double edge_prob = d / n;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (rng.uniform() < edge_prob) {
        Eigen::MatrixXd& b = p.blocks[p.pair_index(i, j)];
        for (int a = 0; a < q; ++a)
          for (int c = 0; c < q; ++c) b(a, c) = sigma_j * rng.gaussian();
        p.edges.emplace_back(i, j);
      }
    }
  return p;
}

/// E(x) = - sum_{i<j} J_ij(x_i, x_j) - sum_i h_i(x_i)
inline double potts_energy(const PottsConfig& x, const PottsParams& p) {
  double e = 0.0;
  for (int i = 0; i < p.n; ++i) {
    e -= p.h(i, x[i]);
    for (int j = i + 1; j < p.n; ++j)
      e -= p.blocks[p.pair_index(i, j)](x[i], x[j]);
  }
  return e;
}

namespace detail {

// One heat-bath sweep; couplings scaled by beta (fields always on).
inline void gibbs_sweep(PottsConfig& x, const PottsParams& p, double beta,
                        Rng& rng, Eigen::VectorXd& field) {
  for (int i = 0; i < p.n; ++i) {
    for (int a = 0; a < p.q; ++a) field[a] = p.h(i, a);
    if (beta != 0.0) {
      for (int j = 0; j < p.n; ++j) {
        if (j == i) continue;
        for (int a = 0; a < p.q; ++a)
          field[a] += beta * p.coupling(i, j, a, x[j]);
      }
    }
    const double m = field.maxCoeff();
    double z = 0.0;
    for (int a = 0; a < p.q; ++a) {
      field[a] = std::exp(field[a] - m);
      z += field[a];
    }
    double u = rng.uniform() * z;
    int pick = p.q - 1;
    for (int a = 0; a < p.q; ++a) {
      u -= field[a];
      if (u <= 0.0) {
        pick = a;
        break;
      }
    }
    x[i] = pick;
  }
}

inline PottsConfig random_config(const PottsParams& p, Rng& rng) {
  PottsConfig x(p.n);
  for (int i = 0; i < p.n; ++i)
    x[i] = static_cast<int>(rng.uniform_int(p.q));
  return x;
}

}  // namespace detail

/// Single-site heat-bath Gibbs sampling: `burn_in` sweeps, then one recorded
/// configuration every `thinning` sweeps.
inline PottsSampleSet mcmc_sample(const PottsParams& p, int num_samples,
                                  int burn_in, int thinning,
                                  std::uint64_t seed) {
  if (num_samples < 1) throw InvalidInputError("mcmc_sample: p >= 1 required");
  if (thinning < 1) throw InvalidInputError("mcmc_sample: thinning >= 1");
  PottsSampleSet out;
  out.n = p.n;
  out.q = p.q;
  out.seed = seed;
  out.burn_in = burn_in;
  out.thinning = thinning;
  out.configs.reserve(num_samples);
  Rng rng(seed);
  PottsConfig x = detail::random_config(p, rng);
  Eigen::VectorXd field(p.q);
  for (int s = 0; s < burn_in; ++s) detail::gibbs_sweep(x, p, 1.0, rng, field);
  for (int k = 0; k < num_samples; ++k) {
    for (int s = 0; s < thinning; ++s)
      detail::gibbs_sweep(x, p, 1.0, rng, field);
    out.configs.push_back(x);
  }
  return out;
}

/// Exact log Z by full enumeration (q^n states, running-max stabilized).
inline double exact_log_z(const PottsParams& p) {
  double states = std::pow(static_cast<double>(p.q), p.n);
  if (states > 1e7 + 0.5)
    throw InvalidInputError("exact_log_z: state space exceeds 10^7");
  PottsConfig x(p.n, 0);
  double running_max = -std::numeric_limits<double>::infinity();
  double running_sum = 0.0;
  while (true) {
    const double v = -potts_energy(x, p);
    if (v > running_max) {
      running_sum = running_sum * std::exp(running_max - v) + 1.0;
      running_max = v;
    } else {
      running_sum += std::exp(v - running_max);
    }
    int i = 0;
    for (; i < p.n; ++i) {
      if (++x[i] < p.q) break;
      x[i] = 0;
    }
    if (i == p.n) break;
  }
  return running_max + std::log(running_sum);
}

struct AisResult {
  double log_z = 0.0;
  double stderr_jackknife = 0.0;
  bool degenerate = false;  // effective sample size < 2
};

/// Annealed importance sampling from the independent-site model (couplings
/// scaled by beta in [0, 1] on a linear schedule, fields always on).
inline AisResult ais_log_z(const PottsParams& p, int num_temps, int num_chains,
                           int sweeps_per_temp, std::uint64_t seed) {
  if (num_temps < 2) throw InvalidInputError("ais_log_z: num_temps >= 2");
  if (num_chains < 2) throw InvalidInputError("ais_log_z: num_chains >= 2");

  // base model: fields only
  double log_z0 = 0.0;
  for (int i = 0; i < p.n; ++i) {
    const double m = p.h.row(i).maxCoeff();
    double z = 0.0;
    for (int a = 0; a < p.q; ++a) z += std::exp(p.h(i, a) - m);
    log_z0 += m + std::log(z);
  }

  const auto coupling_sum = [&](const PottsConfig& x) {
    double s = 0.0;
    for (int i = 0; i < p.n; ++i)
      for (int j = i + 1; j < p.n; ++j)
        s += p.blocks[p.pair_index(i, j)](x[i], x[j]);
    return s;
  };

  std::vector<double> log_w(num_chains, 0.0);
  for (int c = 0; c < num_chains; ++c) {
    Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(c));
    // exact draw from the base model
    PottsConfig x(p.n);
    for (int i = 0; i < p.n; ++i) {
      const double m = p.h.row(i).maxCoeff();
      double z = 0.0;
      for (int a = 0; a < p.q; ++a) z += std::exp(p.h(i, a) - m);
      double u = rng.uniform() * z;
      int pick = p.q - 1;
      for (int a = 0; a < p.q; ++a) {
        u -= std::exp(p.h(i, a) - m);
        if (u <= 0.0) {
          pick = a;
          break;
        }
      }
      x[i] = pick;
    }
    Eigen::VectorXd field(p.q);
    for (int t = 0; t < num_temps - 1; ++t) {
      const double beta0 = static_cast<double>(t) / (num_temps - 1);
      const double beta1 = static_cast<double>(t + 1) / (num_temps - 1);
      log_w[c] += (beta1 - beta0) * coupling_sum(x);
      for (int s = 0; s < sweeps_per_temp; ++s)
        detail::gibbs_sweep(x, p, beta1, rng, field);
    }
  }

  const double m = *std::max_element(log_w.begin(), log_w.end());
  double sum_w = 0.0, sum_w2 = 0.0;
  for (double lw : log_w) {
    const double w = std::exp(lw - m);
    sum_w += w;
    sum_w2 += w * w;
  }
  AisResult res;
  res.log_z = log_z0 + m + std::log(sum_w / num_chains);
  const double ess = sum_w * sum_w / sum_w2;
  res.degenerate = ess < 2.0;

  // delete-one jackknife on the log-mean-exp
  double var = 0.0;
  const double full = std::log(sum_w / num_chains);
  std::vector<double> loo(num_chains);
  double loo_mean = 0.0;
  for (int c = 0; c < num_chains; ++c) {
    loo[c] = std::log((sum_w - std::exp(log_w[c] - m)) / (num_chains - 1));
    loo_mean += loo[c];
  }
  loo_mean /= num_chains;
  for (int c = 0; c < num_chains; ++c)
    var += (loo[c] - loo_mean) * (loo[c] - loo_mean);
  var *= static_cast<double>(num_chains - 1) / num_chains;
  (void)full;
  res.stderr_jackknife = std::sqrt(var);
  return res;
}

struct PottsLikelihoods {
  double l_train = 0.0;  // normalized by n
  double l_test = 0.0;
  double l_gen = 0.0;
  double stderr_train = 0.0;
  double stderr_test = 0.0;
  double stderr_gen = 0.0;
};

namespace detail {

inline std::pair<double, double> mean_loglik(const PottsParams& model,
                                             const PottsSampleSet& set,
                                             double log_z) {
  double mean = 0.0, m2 = 0.0;
  const double n_inv = 1.0 / model.n;
  std::vector<double> vals;
  vals.reserve(set.configs.size());
  for (const auto& x : set.configs)
    vals.push_back((-potts_energy(x, model) - log_z) * n_inv);
  for (double v : vals) mean += v;
  mean /= vals.size();
  for (double v : vals) m2 += (v - mean) * (v - mean);
  const double se =
      vals.size() > 1 ? std::sqrt(m2 / (vals.size() - 1) / vals.size()) : 0.0;
  return {mean, se};
}

}  // namespace detail

/// Mean per-site log-likelihoods of the three sets under the inferred model.
inline PottsLikelihoods potts_likelihoods(const PottsParams& inferred,
                                          const PottsSampleSet& train,
                                          const PottsSampleSet& test,
                                          const PottsSampleSet& gen,
                                          double log_z) {
  if (train.n != inferred.n || test.n != inferred.n || gen.n != inferred.n ||
      train.q != inferred.q)
    throw InvalidInputError("potts_likelihoods: dimension mismatch");
  PottsLikelihoods out;
  std::tie(out.l_train, out.stderr_train) =
      detail::mean_loglik(inferred, train, log_z);
  std::tie(out.l_test, out.stderr_test) =
      detail::mean_loglik(inferred, test, log_z);
  std::tie(out.l_gen, out.stderr_gen) =
      detail::mean_loglik(inferred, gen, log_z);
  return out;
}

enum class KlMethod { Exact, Mc };

struct KlResult {
  double value = 0.0;
  double stderr_mc = 0.0;  // zero for the exact method
};

/// D_KL(inferred || truth) = <E_tr - E_inf>_inf + log Z_tr - log Z_inf.
/// Exact path enumerates; MC path averages over `budget` samples drawn from
/// the inferred model with both log Z values supplied by the caller.
inline KlResult kl_divergence(const PottsParams& inferred,
                              const PottsParams& truth, KlMethod method,
                              int budget = 10000, std::uint64_t seed = 0,
                              double log_z_inferred = 0.0,
                              double log_z_truth = 0.0) {
  if (inferred.n != truth.n || inferred.q != truth.q)
    throw InvalidInputError("kl_divergence: dimension mismatch");
  KlResult res;
  if (method == KlMethod::Exact) {
    const double lz_inf = exact_log_z(inferred);
    const double lz_tr = exact_log_z(truth);
    PottsConfig x(inferred.n, 0);
    double kl = 0.0;
    while (true) {
      const double lp_inf = -potts_energy(x, inferred) - lz_inf;
      const double lp_tr = -potts_energy(x, truth) - lz_tr;
      kl += std::exp(lp_inf) * (lp_inf - lp_tr);
      int i = 0;
      for (; i < inferred.n; ++i) {
        if (++x[i] < inferred.q) break;
        x[i] = 0;
      }
      if (i == inferred.n) break;
    }
    res.value = kl;
    return res;
  }
  const PottsSampleSet s = mcmc_sample(inferred, budget, 1000, 10, seed);
  double mean = 0.0, m2 = 0.0;
  std::vector<double> vals;
  vals.reserve(s.configs.size());
  for (const auto& x : s.configs)
    vals.push_back(potts_energy(x, truth) - potts_energy(x, inferred));
  for (double v : vals) mean += v;
  mean /= vals.size();
  for (double v : vals) m2 += (v - mean) * (v - mean);
  res.value = mean + log_z_truth - log_z_inferred;
  res.stderr_mc = std::sqrt(m2 / (vals.size() - 1) / vals.size());
  return res;
}

/// Zero-sum gauge conversion, provided for parameter comparison only (the L2
/// pseudo-likelihood objective already selects a unique representative).
inline PottsParams to_zero_sum_gauge(const PottsParams& p) {
  PottsParams out = p;
  for (int i = 0; i < p.n; ++i)
    for (int j = i + 1; j < p.n; ++j) {
      Eigen::MatrixXd& b = out.blocks[out.pair_index(i, j)];
      const Eigen::VectorXd row_mean = b.rowwise().mean();
      const Eigen::VectorXd col_mean = b.colwise().mean();
      const double total = b.mean();
      for (int a = 0; a < p.q; ++a)
        for (int c = 0; c < p.q; ++c)
          b(a, c) += total - row_mean[a] - col_mean[c];
      out.h.row(i) += (row_mean.array() - total).matrix().transpose();
      out.h.row(j) += (col_mean.array() - total).matrix().transpose();
    }
  for (int i = 0; i < p.n; ++i) out.h.row(i).array() -= out.h.row(i).mean();
  return out;
}

}  // namespace grl
