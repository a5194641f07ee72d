#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ltlab/experiments.hpp"

namespace {

struct CommonFlags {
  std::vector<int> sides = {64};
  double theta = 1.0;
  std::vector<double> etas = {0.5};
  int replicas = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "csv";
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_theta, bool with_eta) {
  cmd->add_option("--n", f.sides, "torus side(s)")
      ->check(CLI::Range(2, 1 << 20))
      ->delimiter(',');
  if (with_theta) cmd->add_option("--theta", f.theta, "time scale multiplier theta");
  if (with_eta) cmd->add_option("--eta", f.etas, "level parameter(s) eta")->delimiter(',');
  cmd->add_option("--replicas", f.replicas, "independent replicas")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", f.seed, "base RNG seed");
  cmd->add_option("--out", f.out, "output path (default: stdout)");
  cmd->add_option("--format", f.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  cmd->add_option("--workers", f.workers, "worker threads (0 = all cores)")
      ->check(CLI::NonNegativeNumber);
}

ltlab::ExperimentConfig to_config(const CommonFlags& f, const std::string& mode) {
  ltlab::ExperimentConfig cfg;
  cfg.mode = mode;
  cfg.sides = f.sides;
  cfg.theta = f.theta;
  cfg.etas = f.etas;
  cfg.replicas = f.replicas;
  cfg.seed = f.seed;
  cfg.out = f.out;
  cfg.format = f.format;
  cfg.workers = f.workers;
  return cfg;
}

int execute(const ltlab::ExperimentConfig& cfg) {
  try {
    ltlab::Artifact art = ltlab::run_mode(cfg);
    ltlab::write_artifact(art, cfg, nullptr);
    if (cfg.format == "csv" && !cfg.out.empty())
      std::cerr << art.analysis.dump(2) << "\n";
    return art.exit_code;
  } catch (const ltlab::ConfigParse& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ltlab::IoFailure& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const ltlab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"local-time experiments on the 2D torus"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(LTLAB_VERSION));

  CommonFlags census_f, late_f, extremes_f, exponents_f, excursions_f, gff_f, green_f;
  std::string census_sign = "thick", exponents_sign = "thick";
  double gff_t = 20.0;
  std::vector<double> green_radii = {4, 8, 16, 32};
  int exc_depth = 2;
  double exc_r0 = 16.0, exc_rho = 2.5;
  long exc_budget = 32;
  std::string run_path;

  CLI::App* census = app.add_subcommand("census", "thick/thin point census at tau_{t_theta}");
  add_common(census, census_f, true, true);
  census->add_option("--sign", census_sign, "thick or thin")
      ->check(CLI::IsMember({"thick", "thin"}));

  CLI::App* late = app.add_subcommand("late", "late-point census at the cover-time scale");
  add_common(late, late_f, false, true);

  CLI::App* extremes =
      app.add_subcommand("extremes", "normalized max/min of the local-time field");
  add_common(extremes, extremes_f, true, false);

  CLI::App* exponents =
      app.add_subcommand("exponents", "census sweep with log-log slope fits");
  add_common(exponents, exponents_f, true, true);
  exponents->add_option("--sign", exponents_sign, "thick or thin")
      ->check(CLI::IsMember({"thick", "thin"}));

  CLI::App* excursions =
      app.add_subcommand("excursions", "multi-scale excursion counts around a centre");
  add_common(excursions, excursions_f, false, false);
  excursions->add_option("--depth", exc_depth, "number of annulus levels")
      ->check(CLI::Range(2, 30));
  excursions->add_option("--r0", exc_r0, "top radius");
  excursions->add_option("--rho", exc_rho, "radius ratio between levels");
  excursions->add_option("--budget", exc_budget, "top-level excursion budget")
      ->check(CLI::PositiveNumber);

  CLI::App* gff = app.add_subcommand("gff-check", "Ray-Knight coupling diagnostics");
  add_common(gff, gff_f, false, false);
  gff->add_option("--t", gff_t, "inverse local time level");

  CLI::App* green =
      app.add_subcommand("green-check", "Green's function log-asymptotics table");
  add_common(green, green_f, false, false);
  green->add_option("--radii", green_radii, "ball radii to tabulate")->delimiter(',');

  CLI::App* runcmd = app.add_subcommand("run", "run a sweep from a key=value config file");
  runcmd->add_option("config", run_path, "config file path")->required();

  CLI11_PARSE(app, argc, argv);

  if (census->parsed()) {
    ltlab::ExperimentConfig cfg = to_config(census_f, "census");
    cfg.sign = census_sign;
    return execute(cfg);
  }
  if (late->parsed()) return execute(to_config(late_f, "late"));
  if (extremes->parsed()) return execute(to_config(extremes_f, "extremes"));
  if (exponents->parsed()) {
    ltlab::ExperimentConfig cfg = to_config(exponents_f, "exponents");
    cfg.sign = exponents_sign;
    return execute(cfg);
  }
  if (excursions->parsed()) {
    ltlab::ExperimentConfig cfg = to_config(excursions_f, "excursions");
    cfg.depth = exc_depth;
    cfg.r0 = exc_r0;
    cfg.rho = exc_rho;
    cfg.budget = exc_budget;
    return execute(cfg);
  }
  if (gff->parsed()) {
    ltlab::ExperimentConfig cfg = to_config(gff_f, "gff-check");
    cfg.t = gff_t;
    return execute(cfg);
  }
  if (green->parsed()) {
    ltlab::ExperimentConfig cfg = to_config(green_f, "green-check");
    cfg.radii = green_radii;
    return execute(cfg);
  }
  if (runcmd->parsed()) return ltlab::run_experiment_cli(run_path);
  return 0;
}
