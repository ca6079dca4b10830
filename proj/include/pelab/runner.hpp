#pragma once

#include "pelab/config.hpp"
#include "pelab/probe.hpp"

#include <optional>
#include <string>
#include <vector>

namespace pelab {

struct RunContext {
  std::string out_dir = "pelab_out";
  uint64_t seed = 0;
  int threads = 1;
  std::optional<double> step_override;
  bool quiet = false;
};

/// Exit codes shared by all commands: 0 success, 2 counterexample or failed
/// check, 1 error (thrown as an exception and mapped by the CLI).
int run_certify(const ExperimentConfig& cfg, const RunContext& ctx);
int run_simulate(const ExperimentConfig& cfg, const RunContext& ctx);
int run_uniformity(const ExperimentConfig& cfg, const RunContext& ctx);
int run_reproduce(const std::string& name, const RunContext& ctx);

const std::vector<std::string>& reproduce_names();

/// Writes content to path via a temp file and rename, creating parent
/// directories as needed.
void write_file_atomic(const std::string& path, const std::string& content);

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (t, norm)
};

/// Fixed 800x500 canvas, log-10 vertical axis with decade gridlines, one
/// polyline per series.
std::string svg_norm_plot(const std::vector<SvgSeries>& series);

}  // namespace pelab
