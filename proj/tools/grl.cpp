// Command-line front end for the workbench pipelines.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "grl/experiments.hpp"
#include "grl/io.hpp"

namespace {

grl::ExperimentConfig load_or_default(const std::string& config_path) {
  if (config_path.empty()) return grl::ExperimentConfig{};
  return grl::load_config(config_path);
}

void apply_overrides(grl::ExperimentConfig& cfg, const std::string& out,
                     const std::vector<std::uint64_t>& seeds,
                     const std::string& format) {
  if (!out.empty()) cfg.out_dir = out;
  if (cfg.out_dir == "out") {
    if (const char* root = std::getenv("GRL_OUT_DIR")) cfg.out_dir = root;
  }
  if (!seeds.empty()) cfg.seeds = seeds;
  if (!format.empty()) {
    cfg.emit_csv = format.find("csv") != std::string::npos;
    cfg.emit_svg = format.find("svg") != std::string::npos;
  }
}

// Preset configurations for the headline experiment setups at desk scale.
grl::ExperimentConfig figure_preset(int figure) {
  grl::ExperimentConfig c;
  switch (figure) {
    case 2:  // GOE scan, moderate sampling
      c.kind = "goe";
      c.n = 50;
      c.sigma = 0.5;
      c.alpha = 10.0;
      c.seeds = {1, 2, 3};
      break;
    case 4:  // band matrix scan
      c.kind = "band";
      c.n = 50;
      c.w = 10;
      c.sigma = 0.5;
      c.alpha = 10.0;
      c.seeds = {1, 2, 3};
      break;
    case 5:  // single-sample regime
      c.kind = "goe";
      c.n = 200;
      c.sigma = 0.5;
      c.p = 1;
      c.seeds = {1, 2, 3, 4, 5};
      break;
    case 6:  // L1 pipeline on the ring chain
      c.kind = "chain";
      c.n = 50;
      c.sigma = 0.5;
      c.alpha = 10.0;
      c.penalty = "l1";
      c.gamma_min = 1e-3;
      c.gamma_max = 10.0;
      c.seeds = {1};
      break;
    case 8:  // Potts KL scan
      c.kind = "potts";
      c.n = 10;
      c.q = 3;
      c.d = 2.5;
      c.mcmc_p = 1000;
      c.gamma_min = 1e-3;
      c.gamma_max = 10.0;
      c.gamma_points = 25;
      c.seeds = {1};
      break;
    case 9:  // posterior traces at several temperatures
      c.kind = "goe";
      c.n = 30;
      c.sigma = 0.5;
      c.alpha = 10.0;
      c.post_gamma = 5.0;
      c.betas = {10.0, 100.0, 1000.0};
      c.steps = 20000;
      c.seeds = {1};
      break;
    default:
      throw grl::InvalidInputError("reproduce-figure: supported indices are "
                                   "2, 4, 5, 6, 8, 9");
  }
  return c;
}

void report_files(const std::vector<std::string>& files) {
  for (const auto& f : files) std::cout << "wrote " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"regularized MAP inference workbench"};
  app.require_subcommand(1);

  std::string config_path, out_dir, format;
  std::vector<std::uint64_t> seeds;
  int jobs = 1;
  app.add_option("--config", config_path, "configuration file");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--seeds", seeds, "seed list")->delimiter(',');
  app.add_option("--jobs", jobs, "worker count (reserved)");
  app.add_option("--format", format, "output formats, e.g. csv,svg");

  auto* gen = app.add_subcommand("generate", "write a ground-truth model");
  std::string gen_path = "model.bin";
  gen->add_option("--model-out", gen_path, "output path");

  auto* scan = app.add_subcommand("scan", "gamma scan of the Gaussian pipeline");
  auto* find = app.add_subcommand("find-gammas",
                                  "locate gamma_opt / gamma_cross / gamma_half");
  auto* potts = app.add_subcommand("potts-scan", "Potts KL scan over gamma");
  auto* post = app.add_subcommand("posterior", "posterior sampling traces");
  auto* fig = app.add_subcommand("reproduce-figure", "run a preset experiment");
  int figure = 0;
  fig->add_option("index", figure, "preset index: 2, 4, 5, 6, 8 or 9")
      ->required();

  // allow the global options after the verb as well
  for (auto* sub : {gen, scan, find, potts, post, fig}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    grl::ExperimentConfig cfg = load_or_default(config_path);
    apply_overrides(cfg, out_dir, seeds, format);

    if (gen->parsed()) {
      if (cfg.kind == "potts") {
        const grl::PottsParams p = grl::generate_er_potts(
            cfg.n, cfg.q, cfg.d, std::sqrt(cfg.sigma_h2),
            std::sqrt(cfg.sigma_j2), cfg.seeds.front());
        grl::write_potts_params(gen_path, p);
      } else {
        const grl::InteractionMatrix j =
            grl::generate_from_config(cfg, cfg.seeds.front());
        grl::write_matrix_binary(gen_path, j.entries());
      }
      std::cout << "wrote " << gen_path << "\n";
    } else if (scan->parsed()) {
      const auto art = grl::run_gaussian_scan(cfg);
      report_files(art.files);
      if (art.failures > 0) std::cerr << art.failures << " seed(s) failed\n";
    } else if (find->parsed()) {
      const auto art = grl::run_gaussian_scan(cfg);
      for (const auto& r : art.seeds) {
        if (r.failed) continue;
        std::cout << "seed " << r.seed << ": gamma_opt=";
        if (r.scan.gamma_opt) std::cout << *r.scan.gamma_opt;
        else std::cout << "none";
        std::cout << " gamma_cross=";
        if (r.scan.gamma_cross) std::cout << *r.scan.gamma_cross;
        else std::cout << "none";
        std::cout << " gamma_half=";
        if (r.scan.gamma_half) std::cout << *r.scan.gamma_half;
        else std::cout << "none";
        std::cout << "\n";
      }
    } else if (potts->parsed()) {
      const auto art = grl::run_potts_scan(cfg);
      report_files(art.files);
    } else if (post->parsed()) {
      const auto art = grl::run_posterior(cfg);
      report_files(art.files);
    } else if (fig->parsed()) {
      grl::ExperimentConfig preset = figure_preset(figure);
      preset.out_dir = cfg.out_dir == "out"
                           ? "out/figure" + std::to_string(figure)
                           : cfg.out_dir;
      if (!seeds.empty()) preset.seeds = seeds;
      if (!format.empty()) {
        preset.emit_csv = cfg.emit_csv;
        preset.emit_svg = cfg.emit_svg;
      }
      if (preset.kind == "potts") {
        report_files(grl::run_potts_scan(preset).files);
      } else if (figure == 9) {
        report_files(grl::run_posterior(preset).files);
      } else {
        report_files(grl::run_gaussian_scan(preset).files);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
