#pragma once

#include "pelab/catalog.hpp"
#include "pelab/pe.hpp"
#include "pelab/signal.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace pelab {

/// One analysis to run: a validated op name plus its parameter block.
struct AnalysisEntry {
  std::string name;  // output file stem; defaults to "<op>_<index>"
  std::string op;
  nlohmann::json params;
};

/// Parsed experiment description. Signals and state functions are declared
/// once and referenced from analysis entries by name.
struct ExperimentConfig {
  std::string name;
  nlohmann::json system;                  // {"catalog":..., "params":{...}} or null
  std::vector<nlohmann::json> signals;    // declarations, validated
  std::vector<AnalysisEntry> analysis;
  std::string output_dir;
  uint64_t seed = 0;

  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse(const nlohmann::json& j,
                                const std::string& origin);
  nlohmann::json to_json() const;
};

const std::vector<std::string>& known_ops();
const std::vector<std::string>& known_catalogs();
const std::vector<std::string>& known_builtin_signals();

/// Instantiates a declared signal (builtin or CSV-backed).
TimeSignal build_time_signal(const nlohmann::json& decl);
StateFunction build_state_function(const nlohmann::json& decl);
bool is_state_function_decl(const nlohmann::json& decl);

/// Built catalog system plus the auxiliary pieces some analyses need.
struct BuiltSystem {
  OdeSystem sys;
  std::optional<TimeSignal> regressor;  // slotine_li only
  std::optional<std::function<double(double, const Vector&)>> lyapunov;
};

BuiltSystem build_system(const nlohmann::json& system_block,
                         const std::vector<nlohmann::json>& signal_decls);

}  // namespace pelab
