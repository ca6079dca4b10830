#include "pelab/runner.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

pelab::RunContext make_context(const std::string& out, uint64_t seed,
                               bool seed_set, int threads, double step,
                               bool quiet, pelab::ExperimentConfig* cfg) {
  pelab::RunContext ctx;
  if (!out.empty()) {
    ctx.out_dir = out;
  } else if (cfg && !cfg->output_dir.empty()) {
    ctx.out_dir = cfg->output_dir;
  } else if (const char* env = std::getenv("PELAB_OUT")) {
    ctx.out_dir = env;
  }
  ctx.threads = threads;
  ctx.quiet = quiet;
  if (step > 0.0) ctx.step_override = step;
  if (cfg) {
    if (seed_set) cfg->seed = seed;
    ctx.seed = cfg->seed;
  } else {
    ctx.seed = seed;
  }
  return ctx;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "pelab: excitation certificates and uniform-stability probes for "
      "time-varying systems"};
  app.require_subcommand(1);

  std::string config_path, out_dir, experiment;
  uint64_t seed = 0;
  int threads = 1;
  double step = 0.0;
  bool quiet = false;

  app.add_option("--out", out_dir, "Output directory (default: $PELAB_OUT)");
  app.add_option("--seed", seed, "Seed recorded in outputs; overrides config");
  app.add_option("--threads", threads, "Worker threads for grid sweeps")
      ->check(CLI::PositiveNumber);
  app.add_option("--step", step, "Integrator step override (seconds)");
  app.add_flag("--quiet", quiet, "Suppress progress lines");

  auto* certify = app.add_subcommand(
      "certify", "Run excitation-certificate analyses from a config");
  certify->fallthrough();
  certify->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();

  auto* simulate =
      app.add_subcommand("simulate", "Integrate configured systems to CSV/SVG");
  simulate->fallthrough();
  simulate->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();

  auto* uniformity = app.add_subcommand(
      "uniformity", "Settling-time sweeps and start-time-uniformity verdicts");
  uniformity->fallthrough();
  uniformity->add_option("--config", config_path, "Experiment config (JSON)")
      ->required();

  auto* reproduce =
      app.add_subcommand("reproduce", "Run a bundled experiment end to end");
  reproduce->fallthrough();
  reproduce->add_option("name", experiment, "Bundled experiment name")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const bool seed_set = app.count("--seed") > 0;
    if (reproduce->parsed()) {
      auto ctx =
          make_context(out_dir, seed, seed_set, threads, step, quiet, nullptr);
      return pelab::run_reproduce(experiment, ctx);
    }
    pelab::ExperimentConfig cfg =
        pelab::ExperimentConfig::parse_file(config_path);
    auto ctx = make_context(out_dir, seed, seed_set, threads, step, quiet, &cfg);
    if (certify->parsed()) return pelab::run_certify(cfg, ctx);
    if (simulate->parsed()) return pelab::run_simulate(cfg, ctx);
    if (uniformity->parsed()) return pelab::run_uniformity(cfg, ctx);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
