#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "grl/common.hpp"
#include "grl/gamma_solver.hpp"
#include "grl/io.hpp"
#include "grl/lasso.hpp"
#include "grl/likelihoods.hpp"
#include "grl/map_l2.hpp"
#include "grl/plm.hpp"
#include "grl/posterior.hpp"
#include "grl/potts.hpp"
#include "grl/sampling.hpp"
#include "grl/spherical.hpp"
#include "grl/svg.hpp"

namespace grl {

// ---------------------------------------------------------------------------
// Configuration: flat, human-writable key=value text with [sections].

struct ExperimentConfig {
  // model
  std::string kind = "goe";  // goe | band | chain | potts
  int n = 50;
  double sigma = 0.5;
  int w = 10;
  // sampling
  double alpha = 10.0;  // used when p == 0
  int p = 0;
  std::vector<std::uint64_t> seeds = {1};
  bool rescale = true;
  // scan
  double gamma_min = 1e-3;
  double gamma_max = 1e3;
  int gamma_points = 61;
  std::string penalty = "l2";  // l2 | l1
  // output
  std::string out_dir = "out";
  bool emit_csv = true;
  bool emit_svg = true;
  // potts
  int q = 10;
  double d = 2.5;
  double sigma_h2 = 5.0;
  double sigma_j2 = 1.0;
  double gamma_h_ratio = -1.0;  // < 0: default gamma / (10 n)
  int mcmc_p = 1000;
  int burn_in = 1000;
  int thinning = 10;
  bool use_ais_likelihoods = false;
  // posterior
  std::vector<double> betas = {100.0};
  int steps = 20000;
  double post_gamma = 5.0;

  int samples_per_seed() const {
    return p > 0 ? p : std::max(1, static_cast<int>(std::lround(alpha * n)));
  }
  double effective_alpha() const {
    return static_cast<double>(samples_per_seed()) / n;
  }
  double gamma_h(double gamma) const {
    return gamma_h_ratio > 0.0 ? gamma * gamma_h_ratio : gamma / (10.0 * n);
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

template <typename T>
std::vector<T> parse_list(const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::stringstream c(trim(item));
    T x;
    c >> x;
    out.push_back(x);
  }
  return out;
}

inline bool parse_bool(const std::string& v) {
  return v == "true" || v == "on" || v == "1" || v == "yes";
}

}  // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig c;
  std::string line, section;
  while (std::getline(in, line)) {
    line = detail::trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = line.substr(1, line.size() - 2);
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInputError("config: expected key = value, got: " + line);
    const std::string key = section + "." + detail::trim(line.substr(0, eq));
    const std::string val = detail::trim(line.substr(eq + 1));
    if (key == "model.kind") c.kind = val;
    else if (key == "model.n") c.n = std::stoi(val);
    else if (key == "model.sigma") c.sigma = std::stod(val);
    else if (key == "model.w") c.w = std::stoi(val);
    else if (key == "sampling.alpha") c.alpha = std::stod(val);
    else if (key == "sampling.p") c.p = std::stoi(val);
    else if (key == "sampling.seeds") c.seeds = detail::parse_list<std::uint64_t>(val);
    else if (key == "sampling.rescale_trace") c.rescale = detail::parse_bool(val);
    else if (key == "scan.gamma_min") c.gamma_min = std::stod(val);
    else if (key == "scan.gamma_max") c.gamma_max = std::stod(val);
    else if (key == "scan.points") c.gamma_points = std::stoi(val);
    else if (key == "scan.penalty") c.penalty = val;
    else if (key == "output.dir") c.out_dir = val;
    else if (key == "output.formats") {
      c.emit_csv = val.find("csv") != std::string::npos;
      c.emit_svg = val.find("svg") != std::string::npos;
    } else if (key == "potts.q") c.q = std::stoi(val);
    else if (key == "potts.d") c.d = std::stod(val);
    else if (key == "potts.sigma_h2") c.sigma_h2 = std::stod(val);
    else if (key == "potts.sigma_j2") c.sigma_j2 = std::stod(val);
    else if (key == "potts.gamma_h_ratio") c.gamma_h_ratio = std::stod(val);
    else if (key == "potts.p") c.mcmc_p = std::stoi(val);
    else if (key == "potts.burn_in") c.burn_in = std::stoi(val);
    else if (key == "potts.thinning") c.thinning = std::stoi(val);
    else if (key == "potts.ais_likelihoods") c.use_ais_likelihoods = detail::parse_bool(val);
    else if (key == "posterior.betas") c.betas = detail::parse_list<double>(val);
    else if (key == "posterior.steps") c.steps = std::stoi(val);
    else if (key == "posterior.gamma") c.post_gamma = std::stod(val);
    else throw InvalidInputError("config: unknown key " + key);
    if (c.seeds.empty()) throw InvalidInputError("config: seeds must be non-empty");
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("load_config: cannot open " + path);
  return parse_config(in);
}

// FNV-1a over the canonical (re-serialized) config; embedded in every output
// header so artifacts from different configs never share a hash.
inline std::string config_hash(const ExperimentConfig& c) {
  std::ostringstream canon;
  canon << c.kind << '|' << c.n << '|' << c.sigma << '|' << c.w << '|'
        << c.alpha << '|' << c.p << '|' << c.rescale << '|' << c.gamma_min
        << '|' << c.gamma_max << '|' << c.gamma_points << '|' << c.penalty
        << '|' << c.q << '|' << c.d << '|' << c.sigma_h2 << '|' << c.sigma_j2
        << '|' << c.gamma_h_ratio << '|' << c.mcmc_p << '|' << c.burn_in << '|'
        << c.thinning << '|' << c.steps << '|' << c.post_gamma << '|';
  for (auto s : c.seeds) canon << s << ',';
  for (auto b : c.betas) canon << b << ',';
  std::uint64_t h = 14695981039346656037ull;
  for (char ch : canon.str()) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline InteractionMatrix generate_from_config(const ExperimentConfig& c,
                                              std::uint64_t seed) {
  if (c.kind == "goe") return generate_goe(c.n, c.sigma, seed);
  if (c.kind == "band") return generate_band(c.n, c.w, c.sigma, seed);
  if (c.kind == "chain") return generate_ring_chain(c.n, c.sigma);
  throw InvalidInputError("unknown generator kind: " + c.kind);
}

// ---------------------------------------------------------------------------
// Gaussian scan pipeline

struct SeedScanResult {
  std::uint64_t seed = 0;
  GammaScan scan;
  GammaPrediction prediction;
  double delta_l = 0.0;  // L_test(alpha, gamma_opt) - L_train(inf, 0)
  double theta = 0.0;    // single-sample overlap of the first sample
  double half_diagnostic = 0.0;
  bool failed = false;
  std::string error;
};

inline std::vector<GammaScanRow> scan_l1(const Eigen::MatrixXd& c_emp,
                                         const Eigen::MatrixXd& c_tr,
                                         double alpha,
                                         const std::vector<double>& grid) {
  std::vector<GammaScanRow> rows;
  rows.reserve(grid.size());
  for (double g1 : grid) {
    MapSolution sol = map_l1(c_emp, alpha, g1);
    GammaScanRow row;
    row.gamma = g1;
    row.mu_star = sol.mu_star;
    row.frobenius_sq = sol.frobenius_sq();
    row.likelihoods.gamma = g1;
    row.likelihoods.alpha = alpha;
    row.likelihoods.l_train = train_likelihood(sol);
    row.likelihoods.l_test = test_likelihood(sol, c_tr);
    row.likelihoods.l_gen = gen_likelihood(sol);
    rows.push_back(row);
  }
  return rows;
}

inline SeedScanResult run_seed_scan(const ExperimentConfig& cfg,
                                    std::uint64_t seed) {
  SeedScanResult r;
  r.seed = seed;
  const InteractionMatrix j_tr = generate_from_config(cfg, seed);
  const SphericalModel truth = covariance_from_interaction(j_tr);
  const int p = cfg.samples_per_seed();
  const SampleSet samples = sample_gaussian(truth, p, seed + 1000);
  Eigen::MatrixXd c_emp = empirical_covariance(samples);
  if (cfg.rescale) c_emp = rescale_trace(c_emp, cfg.n);

  const auto grid = log_gamma_grid(cfg.gamma_min, cfg.gamma_max, cfg.gamma_points);
  const double alpha = cfg.effective_alpha();
  GammaContext ctx = make_gamma_context(c_emp, truth.covariance, alpha);

  if (cfg.penalty == "l1") {
    r.scan.grid = scan_l1(c_emp, truth.covariance, alpha, grid);
    // L1 roots from the scan grid only: argmax of l_test and first
    // test/generated sign change, bisected on the solved grid.
    const auto& rows = r.scan.grid;
    int argmax = 0;
    for (std::size_t i = 1; i < rows.size(); ++i)
      if (rows[i].likelihoods.l_test > rows[argmax].likelihoods.l_test)
        argmax = static_cast<int>(i);
    r.scan.gamma_opt = rows[argmax].gamma;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
      const double a = rows[i].likelihoods.l_test - rows[i].likelihoods.l_gen;
      const double b =
          rows[i + 1].likelihoods.l_test - rows[i + 1].likelihoods.l_gen;
      if (a * b < 0.0) {
        const auto f = [&](double g1) {
          MapSolution sol = map_l1(c_emp, alpha, g1);
          return test_likelihood(sol, truth.covariance) - gen_likelihood(sol);
        };
        r.scan.gamma_cross = brent_root(f, rows[i].gamma, rows[i + 1].gamma, 1e-10);
        break;
      }
    }
  } else {
    r.scan = scan_gammas(ctx, grid);
    if (r.scan.gamma_half)
      r.half_diagnostic =
          gamma_half_diagnostic(ctx, j_tr.entries(), *r.scan.gamma_half);
  }

  r.prediction = predict_gamma_cross_infinite(j_tr);
  Eigen::VectorXd u = samples.data.row(0).transpose();
  u /= u.norm();
  r.theta = overlap_theta(u, truth.covariance);
  if (r.scan.gamma_opt) {
    const double l_train_inf =
        0.5 * (j_tr.entries().cwiseProduct(truth.covariance)).sum() -
        log_partition(j_tr.spectrum(), truth.mu);
    const double l_test_opt =
        cfg.penalty == "l1"
            ? [&] {
                MapSolution sol = map_l1(c_emp, alpha, *r.scan.gamma_opt);
                return test_likelihood(sol, truth.covariance);
              }()
            : triple_at(ctx, *r.scan.gamma_opt).l_test;
    r.delta_l = l_test_opt - l_train_inf;
  }
  return r;
}

inline void write_scan_csv(const std::string& path, const ExperimentConfig& cfg,
                           const SeedScanResult& r) {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("write_scan_csv: cannot open " + path);
  out << "# config_hash=" << config_hash(cfg) << "\n";
  out << "# seed=" << r.seed << "\n";
  const char* gcol = cfg.penalty == "l1" ? "gamma1" : "gamma";
  out << gcol << ",l_train,l_test,l_gen,mu_star,frobenius_sq\n";
  for (const auto& row : r.scan.grid)
    out << format_double(row.gamma) << ',' << format_double(row.likelihoods.l_train)
        << ',' << format_double(row.likelihoods.l_test) << ','
        << format_double(row.likelihoods.l_gen) << ','
        << format_double(row.mu_star) << ',' << format_double(row.frobenius_sq)
        << '\n';
}

struct GaussianScanArtifacts {
  std::vector<SeedScanResult> seeds;
  std::vector<std::string> files;
  int failures = 0;
};

inline GaussianScanArtifacts run_gaussian_scan(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  GaussianScanArtifacts art;

  for (std::uint64_t seed : cfg.seeds) {
    SeedScanResult r;
    try {
      r = run_seed_scan(cfg, seed);
    } catch (const std::exception& e) {
      r.seed = seed;
      r.failed = true;
      r.error = e.what();
      ++art.failures;
      std::cerr << "seed " << seed << " failed: " << e.what() << "\n";
      art.seeds.push_back(std::move(r));
      continue;
    }
    if (cfg.emit_csv) {
      const std::string path =
          cfg.out_dir + "/scan_seed" + std::to_string(seed) + ".csv";
      write_scan_csv(path, cfg, r);
      art.files.push_back(path);
    }
    art.seeds.push_back(std::move(r));
  }

  if (art.failures == static_cast<int>(cfg.seeds.size()))
    throw DegenerateError("run_gaussian_scan: all seeds failed");

  // summary: one key-value record per seed plus means
  const std::string summary_path = cfg.out_dir + "/summary.txt";
  {
    std::ofstream out(summary_path);
    out << "config_hash " << config_hash(cfg) << "\n";
    double sum_cross = 0, sum_opt = 0, sum_pred = 0, sum_dl = 0;
    int n_cross = 0, n_opt = 0;
    for (const auto& r : art.seeds) {
      if (r.failed) {
        out << "seed " << r.seed << " error " << r.error << "\n";
        continue;
      }
      out << "seed " << r.seed;
      out << " gamma_opt "
          << (r.scan.gamma_opt ? format_double(*r.scan.gamma_opt) : "none");
      out << " gamma_cross "
          << (r.scan.gamma_cross ? format_double(*r.scan.gamma_cross) : "none");
      out << " gamma_half "
          << (r.scan.gamma_half ? format_double(*r.scan.gamma_half) : "none");
      out << " prediction "
          << (r.prediction.finite ? format_double(r.prediction.value) : "inf");
      out << " theta " << format_double(r.theta);
      out << " delta_l " << format_double(r.delta_l);
      out << " half_diagnostic " << format_double(r.half_diagnostic) << "\n";
      if (r.scan.gamma_cross) {
        sum_cross += *r.scan.gamma_cross;
        ++n_cross;
      }
      if (r.scan.gamma_opt) {
        sum_opt += *r.scan.gamma_opt;
        ++n_opt;
      }
      if (r.prediction.finite) sum_pred += r.prediction.value;
      sum_dl += r.delta_l;
    }
    const int n_ok = static_cast<int>(art.seeds.size()) - art.failures;
    if (n_cross) out << "mean_gamma_cross " << format_double(sum_cross / n_cross) << "\n";
    if (n_opt) out << "mean_gamma_opt " << format_double(sum_opt / n_opt) << "\n";
    if (n_ok) {
      out << "mean_prediction " << format_double(sum_pred / n_ok) << "\n";
      out << "mean_delta_l " << format_double(sum_dl / n_ok) << "\n";
    }
  }
  art.files.push_back(summary_path);

  if (cfg.emit_svg) {
    for (const auto& r : art.seeds) {
      if (r.failed) continue;
      SvgPlot plot("likelihoods vs regularization (seed " +
                       std::to_string(r.seed) + ")",
                   cfg.penalty == "l1" ? "gamma1" : "gamma", "L / n");
      plot.set_log_x(true);
      std::vector<double> xs, tr, te, ge;
      for (const auto& row : r.scan.grid) {
        xs.push_back(row.gamma);
        tr.push_back(row.likelihoods.l_train / cfg.n);
        te.push_back(row.likelihoods.l_test / cfg.n);
        ge.push_back(row.likelihoods.l_gen / cfg.n);
      }
      plot.add_series("train", xs, tr);
      plot.add_series("test", xs, te);
      plot.add_series("generated", xs, ge);
      if (r.scan.gamma_opt) plot.add_vline(*r.scan.gamma_opt, "opt");
      if (r.scan.gamma_cross) plot.add_vline(*r.scan.gamma_cross, "cross");
      if (r.prediction.finite) plot.add_vline(r.prediction.value, "pred");
      const std::string path =
          cfg.out_dir + "/likelihoods_seed" + std::to_string(r.seed) + ".svg";
      plot.render(path);
      art.files.push_back(path);
      break;  // one representative plot per run
    }
  }
  return art;
}

// ---------------------------------------------------------------------------
// Potts scan pipeline

struct PottsScanRow {
  double gamma = 0.0;
  double kl = 0.0;
  double kl_stderr = 0.0;
  PottsLikelihoods likelihoods;
  bool has_likelihoods = false;
};

struct PottsScanArtifacts {
  std::vector<PottsScanRow> rows;
  double reference = 0.0;  // 1/d line
  std::vector<std::string> files;
};

inline PottsScanArtifacts run_potts_scan(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::uint64_t seed = cfg.seeds.front();
  const PottsParams truth =
      generate_er_potts(cfg.n, cfg.q, cfg.d, std::sqrt(cfg.sigma_h2),
                        std::sqrt(cfg.sigma_j2), seed);
  const PottsSampleSet train =
      mcmc_sample(truth, cfg.mcmc_p, cfg.burn_in, cfg.thinning, seed + 1);
  const PottsSampleSet test =
      mcmc_sample(truth, cfg.mcmc_p, cfg.burn_in, cfg.thinning, seed + 2);

  const bool exact_ok = std::pow(static_cast<double>(cfg.q), cfg.n) <= 1e7;
  PottsScanArtifacts art;
  art.reference = 1.0 / cfg.d;

  const auto grid = log_gamma_grid(cfg.gamma_min, cfg.gamma_max, cfg.gamma_points);
  for (double gamma : grid) {
    PottsScanRow row;
    row.gamma = gamma;
    const PottsParams inferred =
        plm_infer(train, gamma, cfg.gamma_h(gamma));
    double log_z_inf, log_z_tr;
    if (exact_ok) {
      log_z_inf = exact_log_z(inferred);
      log_z_tr = exact_log_z(truth);
      row.kl = kl_divergence(inferred, truth, KlMethod::Exact).value;
    } else {
      const AisResult ai = ais_log_z(inferred, 1000, 50, 1, seed + 3);
      const AisResult at = ais_log_z(truth, 1000, 50, 1, seed + 4);
      log_z_inf = ai.log_z;
      log_z_tr = at.log_z;
      const KlResult kr = kl_divergence(inferred, truth, KlMethod::Mc, 2000,
                                        seed + 5, log_z_inf, log_z_tr);
      row.kl = kr.value;
      row.kl_stderr = kr.stderr_mc;
    }
    if (cfg.use_ais_likelihoods || exact_ok) {
      const PottsSampleSet gen =
          mcmc_sample(inferred, cfg.mcmc_p, cfg.burn_in, cfg.thinning, seed + 6);
      row.likelihoods = potts_likelihoods(inferred, train, test, gen, log_z_inf);
      row.has_likelihoods = true;
    }
    art.rows.push_back(row);
  }

  const std::string csv_path = cfg.out_dir + "/potts_scan.csv";
  if (cfg.emit_csv) {
    std::ofstream out(csv_path);
    out << "# config_hash=" << config_hash(cfg) << "\n";
    out << "gamma,kl,kl_stderr,l_train,l_test,l_gen\n";
    for (const auto& r : art.rows)
      out << format_double(r.gamma) << ',' << format_double(r.kl) << ','
          << format_double(r.kl_stderr) << ','
          << format_double(r.likelihoods.l_train) << ','
          << format_double(r.likelihoods.l_test) << ','
          << format_double(r.likelihoods.l_gen) << '\n';
    art.files.push_back(csv_path);
  }
  if (cfg.emit_svg) {
    SvgPlot plot("KL divergence vs coupling regularization", "gamma", "KL");
    plot.set_log_x(true);
    std::vector<double> xs, ys;
    for (const auto& r : art.rows) {
      xs.push_back(r.gamma);
      ys.push_back(r.kl);
    }
    plot.add_series("KL(inferred || truth)", xs, ys);
    plot.add_vline(art.reference, "1/d");
    const std::string path = cfg.out_dir + "/potts_kl.svg";
    plot.render(path);
    art.files.push_back(path);
  }
  return art;
}

// ---------------------------------------------------------------------------
// Posterior sampling pipeline

struct PosteriorArtifacts {
  std::vector<PosteriorTrace> traces;
  std::vector<std::string> files;
};

inline PosteriorArtifacts run_posterior(const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::uint64_t seed = cfg.seeds.front();
  const InteractionMatrix j_tr = generate_from_config(cfg, seed);
  const SphericalModel truth = covariance_from_interaction(j_tr);
  const SampleSet samples =
      sample_gaussian(truth, cfg.samples_per_seed(), seed + 1000);
  Eigen::MatrixXd c_emp = empirical_covariance(samples);
  if (cfg.rescale) c_emp = rescale_trace(c_emp, cfg.n);
  const MapSolution map =
      solve_map(c_emp, cfg.effective_alpha(), cfg.post_gamma);

  PosteriorArtifacts art;
  for (double beta : cfg.betas) {
    PosteriorOptions opt;
    opt.record_stride = std::max(1, cfg.steps / 2000);
    PosteriorTrace trace = metropolis_posterior(
        c_emp, truth.covariance, cfg.effective_alpha(), cfg.post_gamma, beta,
        cfg.steps, map, seed + 7, opt);
    std::ostringstream name;
    name << cfg.out_dir << "/posterior_beta" << beta << ".csv";
    if (cfg.emit_csv) {
      std::ofstream out(name.str());
      out << "# config_hash=" << config_hash(cfg) << "\n";
      out << "step,train_energy,test_energy,distance,acceptance\n";
      for (const auto& s : trace.steps)
        out << s.step << ',' << format_double(s.train_energy) << ','
            << format_double(s.test_energy) << ','
            << format_double(s.distance_to_map) << ','
            << format_double(s.acceptance_rate) << '\n';
      art.files.push_back(name.str());
    }
    art.traces.push_back(std::move(trace));
  }

  if (cfg.emit_svg && !art.traces.empty()) {
    const char* names[3] = {"train energy", "distance to MAP", "test energy"};
    for (int panel = 0; panel < 3; ++panel) {
      SvgPlot plot(names[panel], "step", names[panel]);
      for (std::size_t t = 0; t < art.traces.size(); ++t) {
        std::vector<double> xs, ys;
        for (const auto& s : art.traces[t].steps) {
          xs.push_back(s.step);
          ys.push_back(panel == 0 ? s.train_energy
                                  : panel == 1 ? s.distance_to_map
                                               : s.test_energy);
        }
        std::ostringstream label;
        label << "beta=" << cfg.betas[t];
        plot.add_series(label.str(), xs, ys);
      }
      const std::string path =
          cfg.out_dir + "/posterior_panel" + std::to_string(panel) + ".svg";
      plot.render(path);
      art.files.push_back(path);
    }
  }
  return art;
}

}  // namespace grl
