// End-to-end acceptance checks. Each criterion prints exactly one line:
//   PASS  <k>: <name>
//   FAIL  <k>: <name>  (<detail>)
// The process exits nonzero if any criterion fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "grl/experiments.hpp"
#include "grl/gamma_solver.hpp"
#include "grl/lasso.hpp"
#include "grl/likelihoods.hpp"
#include "grl/map_l2.hpp"
#include "grl/plm.hpp"
#include "grl/posterior.hpp"
#include "grl/potts.hpp"
#include "grl/sampling.hpp"
#include "grl/spherical.hpp"

using namespace grl;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int k, const std::string& name, bool ok,
            const std::string& detail = "") {
  if (ok) {
    std::printf("PASS  %2d: %s\n", k, name.c_str());
  } else {
    std::printf("FAIL  %2d: %s  (%s)\n", k, name.c_str(), detail.c_str());
    ++failures;
  }
  std::fflush(stdout);
}

void run(int k, const std::string& name,
         const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(k, name, ok, detail);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

Eigen::MatrixXd empirical(const SphericalModel& truth, int p,
                          std::uint64_t seed) {
  const int n = truth.interaction.n();
  return rescale_trace(empirical_covariance(sample_gaussian(truth, p, seed)),
                       n);
}

}  // namespace

// 1. exact identity between the generated likelihood and the train likelihood
//    minus the penalty term, across generators and parameters
static bool criterion1(std::string& detail) {
  Rng rng(101);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 10 + static_cast<int>(rng.uniform_int(15));
    InteractionMatrix j;
    switch (t % 3) {
      case 0: j = generate_goe(n, 0.3 + 0.4 * rng.uniform(), 1000 + t); break;
      case 1: j = generate_band(n, 4, 0.3 + 0.4 * rng.uniform(), 1000 + t); break;
      default: j = generate_ring_chain(n, 0.3 + 0.4 * rng.uniform()); break;
    }
    const SphericalModel truth = covariance_from_interaction(std::move(j));
    const double alpha = 0.5 + 4.0 * rng.uniform();
    const double gamma = std::exp(4.0 * (rng.uniform() - 0.5));
    const int p = std::max(1, static_cast<int>(alpha * n));
    const MapSolution sol =
        solve_map(empirical(truth, p, 2000 + t), static_cast<double>(p) / n,
                  gamma);
    const double l_train = train_likelihood(sol);
    const double l_gen = gen_likelihood(sol);
    const double identity =
        l_train - 0.5 * gamma / sol.alpha * sol.frobenius_sq();
    worst = std::max(worst, std::abs(l_gen - identity) /
                                (1.0 + std::abs(l_train)));
  }
  detail = "worst relative residual " + std::to_string(worst);
  return worst <= 1e-9;
}

// 2. all three likelihoods collapse to -n/2 at gamma = 1e6
static bool criterion2(std::string& detail) {
  for (int n : {50, 200}) {
    const SphericalModel truth =
        covariance_from_interaction(generate_goe(n, 0.5, 300 + n));
    const MapSolution sol =
        solve_map(empirical(truth, 2 * n, 400 + n), 2.0, 1e6);
    const LikelihoodTriple t = likelihood_triple(sol, truth.covariance);
    const double target = -0.5 * n;
    for (double l : {t.l_train, t.l_test, t.l_gen})
      if (std::abs(l - target) >= 1e-3) {
        detail = "n=" + std::to_string(n) + " off by " +
                 std::to_string(std::abs(l - target));
        return false;
      }
  }
  return true;
}

// 3. high-sampling regime: gamma_cross tracks n / sum J_tr^2 and
//    gamma_opt sits within 10% of gamma_cross
static bool criterion3(std::string& detail) {
  for (double sigma : {0.3, 0.5}) {
    std::vector<double> crosses, rel_pred, rel_opt;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const InteractionMatrix j = generate_goe(200, sigma, 500 + seed);
      const GammaPrediction pred = predict_gamma_cross_infinite(j);
      const SphericalModel truth = covariance_from_interaction(j);
      const GammaContext ctx = make_gamma_context(
          empirical(truth, 20000, 600 + seed), truth.covariance, 100.0);
      const auto cross = find_gamma_cross(ctx);
      const auto opt = find_gamma_opt(ctx);
      if (!cross || !opt) {
        detail = "missing root at sigma " + std::to_string(sigma);
        return false;
      }
      crosses.push_back(*cross / pred.value);
      rel_opt.push_back(std::abs(*opt - *cross) / *cross);
    }
    double mean_ratio = 0.0;
    for (double c : crosses) mean_ratio += c;
    mean_ratio /= crosses.size();
    const double worst_opt = *std::max_element(rel_opt.begin(), rel_opt.end());
    detail = "sigma " + std::to_string(sigma) + ": mean cross/pred " +
             std::to_string(mean_ratio) + ", worst opt gap " +
             std::to_string(worst_opt);
    if (std::abs(mean_ratio - 1.0) >= 0.15 || worst_opt >= 0.10) return false;
  }
  return true;
}

// 4. structured couplings: band and ring chain keep the same prediction
static bool criterion4(std::string& detail) {
  const auto check = [&](InteractionMatrix j, std::uint64_t seed,
                         const char* tag) {
    const GammaPrediction pred = predict_gamma_cross_infinite(j);
    const SphericalModel truth = covariance_from_interaction(std::move(j));
    const GammaContext ctx = make_gamma_context(
        empirical(truth, 20000, seed), truth.covariance, 100.0);
    const auto cross = find_gamma_cross(ctx);
    if (!cross) {
      detail = std::string(tag) + ": no crossing";
      return false;
    }
    const double rel = std::abs(*cross - pred.value) / pred.value;
    detail += std::string(tag) + " rel " + std::to_string(rel) + "; ";
    return rel < 0.20;
  };
  const bool band_ok = check(generate_band(200, 10, 0.5, 700), 710, "band");
  const bool chain_ok = check(generate_ring_chain(200, 0.5), 720, "chain");
  return band_ok && chain_ok;
}

// 5. single-sample regime: closed-form predictions from the overlap theta
static bool criterion5(std::string& detail) {
  const int n = 500;
  // disordered side
  {
    const SphericalModel truth =
        covariance_from_interaction(generate_goe(n, 0.5, 800));
    const SampleSet samples = sample_gaussian(truth, 50, 810);
    std::vector<double> err_cross, gap_opt;
    for (int k = 0; k < 50; ++k) {
      Eigen::MatrixXd c_emp = rescale_trace(
          samples.data.row(k).transpose() * samples.data.row(k), n);
      Eigen::VectorXd u = samples.data.row(k).transpose();
      u /= u.norm();
      const double theta = overlap_theta(u, truth.covariance);
      const auto pred =
          small_alpha_prediction(theta, n, SigmaRegime::Disordered);
      const GammaContext ctx =
          make_gamma_context(std::move(c_emp), truth.covariance, 1.0 / n);
      const auto cross = find_gamma_cross(ctx);
      const auto opt = find_gamma_opt(ctx);
      if (!pred || !cross || !opt) continue;
      err_cross.push_back(std::abs(*cross - *pred) / *pred);
      gap_opt.push_back(std::abs(*opt - *cross) / *cross);
    }
    if (err_cross.size() < 25) {
      detail = "disordered: too few crossings (" +
               std::to_string(err_cross.size()) + ")";
      return false;
    }
    const double med_err = median(err_cross);
    const double med_gap = median(gap_opt);
    detail = "disordered med err " + std::to_string(med_err) + ", opt gap " +
             std::to_string(med_gap) + "; ";
    if (med_err >= 0.15 || med_gap >= 0.10) return false;
  }
  // condensed side
  {
    const SphericalModel truth =
        covariance_from_interaction(generate_goe(n, 3.0, 820));
    const SampleSet samples = sample_gaussian(truth, 50, 830);
    std::vector<double> err_cross;
    for (int k = 0; k < 50; ++k) {
      Eigen::MatrixXd c_emp = rescale_trace(
          samples.data.row(k).transpose() * samples.data.row(k), n);
      Eigen::VectorXd u = samples.data.row(k).transpose();
      u /= u.norm();
      const double theta = overlap_theta(u, truth.covariance);
      const auto pred = small_alpha_prediction(theta, n, SigmaRegime::Ferro);
      const GammaContext ctx =
          make_gamma_context(std::move(c_emp), truth.covariance, 1.0 / n);
      const auto cross = find_gamma_cross(ctx);
      if (!cross || *pred <= 0.0) continue;
      err_cross.push_back(std::abs(*cross - *pred) / *pred);
    }
    if (err_cross.size() < 25) {
      detail += "ferro: too few crossings";
      return false;
    }
    const double med = median(err_cross);
    detail += "ferro med err " + std::to_string(med);
    return med < 0.25;
  }
}

// 6. analytic dL_test/dgamma equals central finite differences
static bool criterion6(std::string& detail) {
  Rng rng(901);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const SphericalModel truth =
        covariance_from_interaction(generate_goe(20, 0.5, 910 + t));
    const double alpha = 0.5 + 4.0 * rng.uniform();
    const int p = std::max(1, static_cast<int>(alpha * 20));
    const GammaContext ctx = make_gamma_context(
        empirical(truth, p, 930 + t), truth.covariance,
        static_cast<double>(p) / 20.0);
    const double gamma = std::exp(3.0 * (rng.uniform() - 0.4));
    const double delta = 1e-5 * gamma;
    const double fd = (triple_at(ctx, gamma + delta).l_test -
                       triple_at(ctx, gamma - delta).l_test) /
                      (2.0 * delta);
    const double analytic = opt_residual(ctx, gamma);
    worst = std::max(worst,
                     std::abs(analytic - fd) / (1.0 + std::abs(analytic)));
  }
  detail = "worst relative error " + std::to_string(worst);
  return worst < 1e-4;
}

// 7. condensation: top covariance eigenvalue reaches n (1 - 1/sigma)
static bool criterion7(std::string& detail) {
  const SphericalModel truth =
      covariance_from_interaction(generate_goe(1000, 2.0, 1001));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(truth.covariance);
  const double top = es.eigenvalues().maxCoeff();
  detail = "top eigenvalue " + std::to_string(top) + " vs 500";
  return std::abs(top - 500.0) / 500.0 < 0.10;
}

// 8. L1 pipeline: interior test-likelihood maximum, finite crossing, and the
//    two roots within an order of magnitude of each other
static bool criterion8(std::string& detail) {
  const int n = 50;
  const SphericalModel truth =
      covariance_from_interaction(generate_goe(n, 0.5, 1101));
  const Eigen::MatrixXd c_emp = empirical(truth, 4 * n, 1102);
  const auto grid = log_gamma_grid(1e-3, 10.0, 25);
  std::vector<double> l_test(grid.size()), diff(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const MapSolution sol = map_l1(c_emp, 4.0, grid[i]);
    l_test[i] = test_likelihood(sol, truth.covariance);
    diff[i] = l_test[i] - gen_likelihood(sol);
  }
  const auto mx = std::max_element(l_test.begin(), l_test.end());
  if (mx == l_test.begin() || mx == l_test.end() - 1) {
    detail = "test maximum not interior";
    return false;
  }
  const double gamma_opt = grid[mx - l_test.begin()];
  double gamma_cross = -1.0;
  for (std::size_t i = 0; i + 1 < diff.size(); ++i)
    if (diff[i] * diff[i + 1] < 0.0) {
      gamma_cross = brent_root(
          [&](double g1) {
            const MapSolution s = map_l1(c_emp, 4.0, g1);
            return test_likelihood(s, truth.covariance) - gen_likelihood(s);
          },
          grid[i], grid[i + 1], 1e-10);
      break;
    }
  if (gamma_cross <= 0.0) {
    detail = "no test/generated crossing";
    return false;
  }
  const double ratio = gamma_opt / gamma_cross;
  detail = "gamma_opt " + std::to_string(gamma_opt) + ", gamma_cross " +
           std::to_string(gamma_cross);
  return ratio >= 0.1 && ratio <= 10.0;
}

// 9. Potts oracles: AIS vs enumeration, PLM gradient, KL argmin near 1/d
static bool criterion9(std::string& detail) {
  // (a) AIS
  {
    const PottsParams p = generate_er_potts(6, 3, 2.5, std::sqrt(5.0), 1.0, 1201);
    const double gap = std::abs(ais_log_z(p, 1000, 100, 1, 1202).log_z -
                                exact_log_z(p));
    detail = "ais gap " + std::to_string(gap) + "; ";
    if (gap >= 0.1) return false;
  }
  // (b) PLM gradient
  {
    const PottsParams truth = generate_er_potts(4, 3, 3.0, 1.0, 1.0, 1211);
    const PottsSampleSet samples = mcmc_sample(truth, 50, 200, 5, 1212);
    PlmSiteProblem prob(0, samples, 0.7, 0.07);
    Rng rng(1213);
    Eigen::VectorXd theta(prob.dim()), grad(prob.dim()), dummy(prob.dim());
    for (int i = 0; i < prob.dim(); ++i) theta[i] = 0.2 * rng.gaussian();
    prob.value_and_grad(theta, grad);
    const double h = 1e-6;
    double worst = 0.0;
    for (int i = 0; i < prob.dim(); ++i) {
      Eigen::VectorXd tp = theta, tm = theta;
      tp[i] += h;
      tm[i] -= h;
      const double fd =
          (prob.value_and_grad(tp, dummy) - prob.value_and_grad(tm, dummy)) /
          (2.0 * h);
      worst = std::max(worst, std::abs(grad[i] - fd) / (1.0 + std::abs(fd)));
    }
    detail += "plm grad err " + std::to_string(worst) + "; ";
    if (worst >= 1e-5) return false;
  }
  // (c) KL argmin
  {
    const PottsParams truth =
        generate_er_potts(10, 3, 2.5, std::sqrt(5.0), 1.0, 1221);
    const PottsSampleSet train = mcmc_sample(truth, 1000, 1000, 10, 1222);
    const auto grid = log_gamma_grid(0.01, 10.0, 13);
    double best_kl = 1e300, argmin = 0.0;
    bool interior = false;
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const PottsParams inferred =
          plm_infer(train, grid[i], grid[i] / (10.0 * 10));
      const double kl = kl_divergence(inferred, truth, KlMethod::Exact).value;
      if (kl < best_kl) {
        best_kl = kl;
        argmin = grid[i];
        interior = i > 0 && i + 1 < grid.size();
      }
    }
    detail += "kl argmin " + std::to_string(argmin);
    if (!interior) return false;
    return argmin >= 0.4 / 3.0 && argmin <= 0.4 * 3.0;
  }
}

// 10. Potts likelihood ordering across the regularization range
static bool criterion10(std::string& detail) {
  double over_mean = 0.0, over_m2 = 0.0;    // l_train - l_test at small gamma
  double match_mean = 0.0, match_m2 = 0.0;  // l_train - l_gen at small gamma
  double under_mean = 0.0, under_m2 = 0.0;  // l_test - l_gen at large gamma
  const int seeds = 10;
  std::vector<double> over, match, under;
  for (std::uint64_t seed = 0; seed < seeds; ++seed) {
    const PottsParams truth =
        generate_er_potts(10, 3, 2.5, std::sqrt(5.0), 1.0, 1300 + seed);
    const PottsSampleSet train = mcmc_sample(truth, 30, 1000, 10, 1310 + seed);
    const PottsSampleSet test = mcmc_sample(truth, 2000, 1000, 10, 1320 + seed);
    const auto triple = [&](double gamma) {
      const PottsParams inf = plm_infer(train, gamma, gamma / 100.0);
      const double lz = exact_log_z(inf);
      const PottsSampleSet gen = mcmc_sample(inf, 2000, 1000, 10, 1330 + seed);
      return potts_likelihoods(inf, train, test, gen, lz);
    };
    const PottsLikelihoods small = triple(0.01);
    const PottsLikelihoods large = triple(50.0);
    over.push_back(small.l_train - small.l_test);
    match.push_back(small.l_train - small.l_gen);
    under.push_back(large.l_test - large.l_gen);
  }
  const auto stats = [](const std::vector<double>& v, double& mean,
                        double& sem) {
    mean = 0.0;
    for (double x : v) mean += x;
    mean /= v.size();
    double m2 = 0.0;
    for (double x : v) m2 += (x - mean) * (x - mean);
    sem = std::sqrt(m2 / (v.size() - 1) / v.size());
  };
  double sem_over, sem_match, sem_under;
  stats(over, over_mean, sem_over);
  stats(match, match_mean, sem_match);
  stats(under, under_mean, sem_under);
  std::ostringstream d;
  d << "overfit gap " << over_mean << "+-" << sem_over << ", train-gen "
    << match_mean << "+-" << sem_match << ", underfit gap " << under_mean
    << "+-" << sem_under;
  detail = d.str();
  // small gamma: strong overfitting, train well above test, train ~ gen
  if (over_mean <= 3.0 * sem_over) return false;
  if (std::abs(match_mean) > over_mean / 3.0) return false;
  // large gamma: generated at or below test
  return under_mean >= -3.0 * sem_under;
}

// 11. posterior sampling: an intermediate window beats the MAP's test energy,
//     and the cold chain converges to the MAP energy
static bool criterion11(std::string& detail) {
  const int n = 20;
  const double alpha = 5.0, gamma = 5.0;
  const SphericalModel truth =
      covariance_from_interaction(generate_goe(n, 0.5, 1401));
  const Eigen::MatrixXd c_emp =
      empirical(truth, static_cast<int>(alpha * n), 1402);
  const MapSolution map = solve_map(c_emp, alpha, gamma);
  const double map_test = map_energy(map.J_star, truth.covariance, alpha, gamma);

  PosteriorOptions opt;
  opt.record_stride = 20;
  const PosteriorTrace warm = metropolis_posterior(
      c_emp, truth.covariance, alpha, gamma, 40.0 * n, 40000, map, 1403, opt);
  bool window = false;
  for (const auto& s : warm.steps)
    if (s.test_energy < map_test) {
      window = true;
      break;
    }
  if (!window) {
    detail = "no step with test energy below the MAP's";
    return false;
  }

  const PosteriorTrace cold = metropolis_posterior(
      c_emp, truth.covariance, alpha, gamma, 1e4 * n, 40000, map, 1404, opt);
  const double e_map = map_energy(map.J_star, c_emp, alpha, gamma);
  double tail = 0.0;
  const std::size_t start = 3 * cold.steps.size() / 4;
  for (std::size_t i = start; i < cold.steps.size(); ++i)
    tail += cold.steps[i].train_energy;
  tail /= cold.steps.size() - start;
  detail = "cold tail " + std::to_string(tail) + " vs MAP " +
           std::to_string(e_map);
  return std::abs(tail - e_map) < 0.01 * std::abs(e_map);
}

// 12. byte-identical reruns of a full experiment
static bool criterion12(std::string& detail) {
  const auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  ExperimentConfig cfg;
  cfg.n = 30;
  cfg.sigma = 0.5;
  cfg.alpha = 5.0;
  cfg.seeds = {1, 2};
  cfg.gamma_points = 15;
  cfg.emit_svg = false;
  const fs::path base = fs::temp_directory_path() / "grl_acceptance_det";
  fs::remove_all(base);
  for (const char* run : {"a", "b"}) {
    cfg.out_dir = (base / run).string();
    run_gaussian_scan(cfg);
  }
  for (const char* name : {"scan_seed1.csv", "scan_seed2.csv", "summary.txt"}) {
    if (slurp(base / "a" / name) != slurp(base / "b" / name)) {
      detail = std::string(name) + " differs between reruns";
      fs::remove_all(base);
      return false;
    }
  }
  fs::remove_all(base);
  return true;
}

int main() {
  run(1, "bias-variance identity", criterion1);
  run(2, "common likelihood limit at strong regularization", criterion2);
  run(3, "high-sampling gamma_cross prediction (GOE)", criterion3);
  run(4, "structured-coupling gamma_cross prediction", criterion4);
  run(5, "single-sample closed-form predictions", criterion5);
  run(6, "analytic likelihood derivative vs finite differences", criterion6);
  run(7, "condensation of the top covariance eigenvalue", criterion7);
  run(8, "L1 pipeline qualitative behavior", criterion8);
  run(9, "Potts exact-oracle suite", criterion9);
  run(10, "Potts likelihood ordering", criterion10);
  run(11, "posterior sampling window and cold limit", criterion11);
  run(12, "byte-identical determinism", criterion12);
  return failures == 0 ? 0 : 1;
}
