#include "pelab/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace pelab {

using nlohmann::json;

const std::vector<std::string>& known_ops() {
  static const std::vector<std::string> ops = {
      "classical_pe", "udpe",       "pointwise_scan", "certificate_map",
      "power",        "filtered_pe", "mornar",        "simulate",
      "uniformity",   "ugs",        "ules_fit",       "necessity"};
  return ops;
}

const std::vector<std::string>& known_catalogs() {
  static const std::vector<std::string> cats = {
      "scalar_linear",     "scalar_decay", "planar_rotation",
      "gradient_adaptive", "driftless",    "feedforward_cubic",
      "slotine_li_pendulum"};
  return cats;
}

const std::vector<std::string>& known_builtin_signals() {
  static const std::vector<std::string> names = {
      "sine",           "abs_sine",   "sin_cos_column",
      "constant",       "inv_one_plus_t", "identity",
      "rotating_projection", "component_pick", "linear_in_state"};
  return names;
}

namespace {

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

double num_or(const json& j, const char* key, double dflt) {
  if (!j.contains(key)) return dflt;
  if (!j.at(key).is_number())
    throw ConfigError(std::string("config: key '") + key + "' must be a number");
  return j.at(key).get<double>();
}

}  // namespace

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw ConfigError("config: " + path + ": " + e.what());
  }
  return parse(j, path);
}

ExperimentConfig ExperimentConfig::parse(const json& j,
                                         const std::string& origin) {
  if (!j.is_object()) throw ConfigError("config: " + origin + ": not an object");
  ExperimentConfig c;
  c.name = j.value("name", std::string("experiment"));
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned() && !j.at("seed").is_number_integer())
      throw ConfigError("config: key 'seed' must be an integer in " + origin);
    c.seed = j.at("seed").get<uint64_t>();
  }
  c.output_dir = j.value("output_dir", std::string());

  if (j.contains("system") && !j.at("system").is_null()) {
    const json& sys = j.at("system");
    if (!sys.is_object() || !sys.contains("catalog"))
      throw ConfigError("config: key 'system' needs a 'catalog' name in " +
                        origin);
    const std::string cat = sys.at("catalog").get<std::string>();
    if (!contains(known_catalogs(), cat))
      throw ConfigError("config: unknown catalog name '" + cat + "' in " +
                        origin);
    c.system = sys;
  }

  if (j.contains("signals")) {
    if (!j.at("signals").is_array())
      throw ConfigError("config: key 'signals' must be an array in " + origin);
    for (const auto& s : j.at("signals")) {
      if (!s.is_object() || !s.contains("name"))
        throw ConfigError("config: each signal needs a 'name' in " + origin);
      if (s.contains("builtin")) {
        const std::string b = s.at("builtin").get<std::string>();
        if (!contains(known_builtin_signals(), b))
          throw ConfigError("config: unknown builtin signal '" + b + "' in " +
                            origin);
      } else if (!s.contains("csv")) {
        throw ConfigError("config: signal '" +
                          s.at("name").get<std::string>() +
                          "' needs 'builtin' or 'csv' in " + origin);
      }
      c.signals.push_back(s);
    }
  }

  if (j.contains("analysis")) {
    if (!j.at("analysis").is_array())
      throw ConfigError("config: key 'analysis' must be an array in " + origin);
    int idx = 0;
    for (const auto& a : j.at("analysis")) {
      if (!a.is_object() || !a.contains("op"))
        throw ConfigError("config: each analysis entry needs an 'op' in " +
                          origin);
      AnalysisEntry e;
      e.op = a.at("op").get<std::string>();
      if (!contains(known_ops(), e.op))
        throw ConfigError("config: unknown op name '" + e.op + "' in " +
                          origin);
      e.name = a.value("name", e.op + "_" + std::to_string(idx));
      e.params = a.value("params", json::object());
      c.analysis.push_back(std::move(e));
      ++idx;
    }
  }
  return c;
}

json ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  j["seed"] = seed;
  j["output_dir"] = output_dir;
  if (!system.is_null()) j["system"] = system;
  j["signals"] = signals;
  json arr = json::array();
  for (const auto& a : analysis) {
    json e;
    e["name"] = a.name;
    e["op"] = a.op;
    e["params"] = a.params;
    arr.push_back(e);
  }
  j["analysis"] = arr;
  return j;
}

bool is_state_function_decl(const json& decl) {
  if (!decl.contains("builtin")) return false;
  const std::string b = decl.at("builtin").get<std::string>();
  return b == "rotating_projection" || b == "component_pick" ||
         b == "linear_in_state";
}

TimeSignal build_time_signal(const json& decl) {
  if (decl.contains("csv")) {
    const auto& cs = decl.at("csv");
    return csv_signal(cs.at("path").get<std::string>(),
                      cs.value("rows", 1), cs.value("cols", 1));
  }
  const std::string b = decl.at("builtin").get<std::string>();
  const json params = decl.value("params", json::object());
  const double omega = num_or(params, "omega", 1.0);
  const double amp = num_or(params, "amp", 1.0);
  if (b == "sine") return signals::sine(omega, amp);
  if (b == "abs_sine") return signals::abs_sine(omega, amp);
  if (b == "sin_cos_column") return signals::sin_cos_column(omega, amp);
  if (b == "inv_one_plus_t") return signals::inverse_one_plus_t();
  if (b == "identity")
    return signals::identity(static_cast<int>(num_or(params, "n", 1)));
  if (b == "constant") {
    if (!params.contains("entries"))
      throw ConfigError("config: constant signal needs 'entries'");
    const auto& ent = params.at("entries");
    const int rows = static_cast<int>(num_or(params, "rows", ent.size()));
    const int cols = static_cast<int>(num_or(params, "cols", 1));
    Matrix m(rows, cols);
    int k = 0;
    for (const auto& v : ent) m(k / cols, k % cols) = v.get<double>(), ++k;
    return signals::constant(m);
  }
  throw ConfigError("config: '" + b + "' is not a time signal builtin");
}

StateFunction build_state_function(const json& decl) {
  const std::string b = decl.at("builtin").get<std::string>();
  const json params = decl.value("params", json::object());
  if (b == "rotating_projection") return signals::rotating_projection();
  if (b == "component_pick")
    return signals::component_pick(static_cast<int>(num_or(params, "n", 2)),
                                   static_cast<int>(num_or(params, "index", 1)),
                                   static_cast<int>(num_or(params, "n1", 1)));
  if (b == "linear_in_state") {
    json inner = decl;
    inner["builtin"] = params.value("signal_builtin", std::string("sin_cos_column"));
    inner["params"] = params;
    return signals::linear_in_state(build_time_signal(inner));
  }
  throw ConfigError("config: '" + b + "' is not a state function builtin");
}

namespace {

const json& find_signal_decl(const std::vector<json>& decls,
                             const std::string& name) {
  for (const auto& d : decls)
    if (d.at("name").get<std::string>() == name) return d;
  throw ConfigError("config: reference to undeclared signal '" + name + "'");
}

}  // namespace

BuiltSystem build_system(const json& system_block,
                         const std::vector<json>& signal_decls) {
  if (system_block.is_null() || !system_block.contains("catalog"))
    throw ConfigError("config: missing 'system.catalog'");
  const std::string cat = system_block.at("catalog").get<std::string>();
  const json params = system_block.value("params", json::object());
  BuiltSystem out;

  if (cat == "scalar_linear") {
    out.sys = make_scalar_linear(num_or(params, "k", 1.0));
    return out;
  }
  if (cat == "scalar_decay") {
    out.sys = make_scalar_decay();
    return out;
  }
  if (cat == "planar_rotation") {
    out.sys = make_planar_rotation();
    return out;
  }
  if (cat == "gradient_adaptive") {
    TimeSignal phi =
        params.contains("phi")
            ? build_time_signal(
                  find_signal_decl(signal_decls,
                                   params.at("phi").get<std::string>()))
            : signals::sine();
    MatchingSystem m = make_gradient_adaptive(
        phi, num_or(params, "atilde", -1.0), num_or(params, "p", 1.0));
    out.sys = m.sys;
    out.lyapunov = m.V;
    return out;
  }
  if (cat == "driftless" || cat == "feedforward_cubic") {
    TimeSignal phi =
        params.contains("g")
            ? build_time_signal(find_signal_decl(
                  signal_decls, params.at("g").get<std::string>()))
            : signals::sine();
    const int n_xi = phi.rows();
    const int n_u = phi.cols();
    InputMap g = [phi](double t, const Vector&, const Vector&) {
      return phi(t);
    };
    FeedforwardSystem f;
    if (cat == "driftless") {
      f = make_driftless(g, n_xi, n_u);
    } else {
      LyapunovFn V;
      V.value = [](double, const Vector& xi) { return 0.5 * xi.squaredNorm(); };
      V.grad = [](double, const Vector& xi) { return xi; };
      auto drift = [](double, const Vector& xi) {
        return Vector(-xi.array().cube());
      };
      f = make_feedforward_bounded(drift, n_xi, g, n_u, V, "feedforward_cubic");
    }
    out.sys = f.sys;
    out.lyapunov = f.W;
    return out;
  }
  if (cat == "slotine_li_pendulum") {
    const ELPlant plant = make_pendulum_el(params.value("viscous", false));
    const std::string qd = params.value("qd", std::string("sine"));
    ReferenceTrajectory ref =
        qd == "zero" ? zero_reference(plant.dof)
                     : sine_reference(plant.dof, num_or(params, "omega", 1.0),
                                      num_or(params, "amp", 1.0));
    ControllerConfig cfg;
    cfg.K_d = Matrix::Identity(plant.dof, plant.dof) * num_or(params, "kd", 5.0);
    cfg.lambda = num_or(params, "lambda", 1.0);
    cfg.gamma = num_or(params, "gamma", 2.0);
    SlotineLiSystem sl = make_slotine_li(plant, ref, cfg);
    out.sys = sl.sys;
    out.regressor = sl.Phi;
    out.lyapunov = sl.V;
    return out;
  }
  throw ConfigError("config: unknown catalog name '" + cat + "'");
}

}  // namespace pelab
