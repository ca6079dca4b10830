#include "pelab/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace pelab {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, p);
}

std::string svg_norm_plot(const std::vector<SvgSeries>& series) {
  constexpr int W = 800, H = 500;
  constexpr double ml = 60, mr = 20, mt = 20, mb = 40;
  constexpr double floor_norm = 1e-16;
  double t_lo = 0.0, t_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  bool first = true;
  for (const auto& s : series)
    for (const auto& [t, v] : s.points) {
      const double y = std::log10(std::max(v, floor_norm));
      if (first) {
        t_lo = t_hi = t;
        y_lo = y_hi = y;
        first = false;
      } else {
        t_lo = std::min(t_lo, t);
        t_hi = std::max(t_hi, t);
        y_lo = std::min(y_lo, y);
        y_hi = std::max(y_hi, y);
      }
    }
  if (t_hi <= t_lo) t_hi = t_lo + 1.0;
  y_lo = std::floor(y_lo);
  y_hi = std::ceil(std::max(y_hi, y_lo + 1.0));

  auto px = [&](double t) {
    return ml + (W - ml - mr) * (t - t_lo) / (t_hi - t_lo);
  };
  auto py = [&](double y) {
    return H - mb - (H - mt - mb) * (y - y_lo) / (y_hi - y_lo);
  };

  static const char* palette[] = {"#4477aa", "#cc3344", "#33885a", "#d98723",
                                  "#7755aa", "#3a9ba6", "#666666"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W
     << "\" height=\"" << H << "\" viewBox=\"0 0 " << W << ' ' << H << "\">\n";
  os << "<rect width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  for (double d = y_lo; d <= y_hi + 1e-9; d += 1.0) {
    const double y = py(d);
    os << "<line x1=\"" << ml << "\" y1=\"" << y << "\" x2=\"" << (W - mr)
       << "\" y2=\"" << y << "\" stroke=\"#dddddd\"/>\n";
    os << "<text x=\"6\" y=\"" << y + 4 << "\" font-size=\"12\">1e"
       << static_cast<int>(d) << "</text>\n";
  }
  os << "<line x1=\"" << ml << "\" y1=\"" << py(y_lo) << "\" x2=\"" << (W - mr)
     << "\" y2=\"" << py(y_lo) << "\" stroke=\"#000000\"/>\n";
  os << "<line x1=\"" << ml << "\" y1=\"" << py(y_lo) << "\" x2=\"" << ml
     << "\" y2=\"" << py(y_hi) << "\" stroke=\"#000000\"/>\n";
  os << "<text x=\"" << (W / 2) << "\" y=\"" << (H - 8)
     << "\" font-size=\"12\" text-anchor=\"middle\">t</text>\n";
  int ci = 0;
  double ly = mt + 14;
  for (const auto& s : series) {
    const char* color = palette[ci % 7];
    os << "<polyline fill=\"none\" stroke=\"" << color
       << "\" stroke-width=\"1.2\" points=\"";
    // Cap emitted points so large sweeps stay diff-able.
    const size_t stride = std::max<size_t>(1, s.points.size() / 2000);
    for (size_t i = 0; i < s.points.size(); i += stride) {
      const auto& [t, v] = s.points[i];
      os << px(t) << ',' << py(std::log10(std::max(v, floor_norm))) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << (W - mr - 150) << "\" y=\"" << ly
       << "\" font-size=\"12\" fill=\"" << color << "\">" << s.label
       << "</text>\n";
    ly += 14;
    ++ci;
  }
  os << "</svg>\n";
  return os.str();
}

namespace {

QuadratureSpec quad_from(const json& p) {
  QuadratureSpec q;
  if (p.contains("rule")) {
    const std::string r = p.at("rule").get<std::string>();
    if (r == "trapezoid")
      q.rule = QuadRule::trapezoid;
    else if (r == "simpson")
      q.rule = QuadRule::simpson;
    else
      throw ConfigError("config: unknown quadrature rule '" + r + "'");
  }
  q.step = p.value("step", 0.0);
  return q;
}

std::vector<double> grid_from(const json& g) {
  std::vector<double> out;
  if (g.is_array()) {
    for (const auto& v : g) out.push_back(v.get<double>());
    return out;
  }
  if (!g.is_object() || !g.contains("lo") || !g.contains("hi"))
    throw ConfigError("config: grid needs 'lo'/'hi' or an array");
  const double lo = g.at("lo").get<double>();
  const double hi = g.at("hi").get<double>();
  const int count = g.value("count", 8);
  if (count < 1) throw ConfigError("config: grid count must be >= 1");
  if (count == 1) return {lo};
  for (int i = 0; i < count; ++i)
    out.push_back(lo + (hi - lo) * i / (count - 1));
  return out;
}

Vector vec_from(const json& a) {
  Vector v(a.size());
  int i = 0;
  for (const auto& x : a) v[i++] = x.get<double>();
  return v;
}

const json& signal_decl(const ExperimentConfig& cfg, const std::string& name) {
  for (const auto& d : cfg.signals)
    if (d.at("name").get<std::string>() == name) return d;
  throw ConfigError("config: reference to undeclared signal '" + name + "'");
}

struct EntryResult {
  bool ok = true;  // certificate present / check passed
  json payload;
};

TimeSignal resolve_time_signal(const ExperimentConfig& cfg, const json& params,
                               const char* key) {
  if (params.contains(key) && params.at(key).is_string())
    return build_time_signal(signal_decl(cfg, params.at(key).get<std::string>()));
  if (params.contains("system_regressor") &&
      params.at("system_regressor").get<bool>()) {
    BuiltSystem b = build_system(cfg.system, cfg.signals);
    if (!b.regressor)
      throw ConfigError("config: system has no regressor signal");
    return *b.regressor;
  }
  throw ConfigError(std::string("config: analysis needs a '") + key +
                    "' signal reference");
}

EntryResult run_entry(const ExperimentConfig& cfg, const AnalysisEntry& e,
                      const RunContext& ctx,
                      const std::map<std::string, json>& prior) {
  const json& p = e.params;
  EntryResult r;
  const QuadratureSpec q = quad_from(p);

  if (e.op == "classical_pe") {
    const TimeSignal S = resolve_time_signal(cfg, p, "signal");
    const auto out = classical_pe_certificate(
        S, p.at("T").get<double>(), q, grid_from(p.at("t_grid")));
    r.ok = certified(out);
    r.payload = outcome_json(out);
    return r;
  }
  if (e.op == "udpe") {
    const StateFunction f =
        build_state_function(signal_decl(cfg, p.at("function").get<std::string>()));
    const AnnulusGrid grid = AnnulusGrid::build(
        f.n1(), f.n2(), p.at("delta").get<double>(),
        p.at("Delta").get<double>(), grid_from(p.at("t_grid")),
        p.value("n_dir", 16), p.value("n_rad", 3));
    const auto out =
        udpe_certificate(f, grid, p.at("T").get<double>(), q, ctx.threads);
    r.ok = certified(out);
    r.payload = outcome_json(out);
    return r;
  }
  if (e.op == "pointwise_scan") {
    const StateFunction f =
        build_state_function(signal_decl(cfg, p.at("function").get<std::string>()));
    ScanOptions opt;
    opt.T0 = p.value("T0", 1.0);
    opt.t_grid = grid_from(p.at("t_grid"));
    const auto res =
        pointwise_pe_scan(f, vec_from(p.at("x")), p.at("T_max").get<double>(),
                          q, opt);
    r.ok = res.has_value();
    r.payload["found"] = res.has_value();
    if (res) {
      r.payload["T"] = res->T;
      r.payload["mu"] = res->mu;
    }
    return r;
  }
  if (e.op == "certificate_map") {
    const StateFunction f =
        build_state_function(signal_decl(cfg, p.at("function").get<std::string>()));
    CertMapOptions opt;
    opt.T0 = p.value("T0", 1.0);
    opt.T_max = p.value("T_max", 64.0);
    opt.t_samples = grid_from(p.at("t_grid"));
    opt.n_dir = p.value("n_dir", 8);
    opt.n_rad = p.value("n_rad", 2);
    opt.threads = ctx.threads;
    std::vector<double> deltas;
    for (const auto& d : p.at("deltas")) deltas.push_back(d.get<double>());
    const auto out =
        certificate_map(f, p.at("Delta").get<double>(), deltas, q, opt);
    r.ok = std::holds_alternative<CertificateMap>(out);
    r.payload = certificate_map_json(out);
    return r;
  }
  if (e.op == "power") {
    const std::string src = p.at("source").get<std::string>();
    auto it = prior.find(src);
    if (it == prior.end())
      throw ConfigError("config: power source '" + src +
                        "' must name an earlier analysis");
    const json& src_json = it->second;
    if (!src_json.value("certified", false)) {
      r.ok = false;
      r.payload["error"] = "source analysis produced no certificate";
      return r;
    }
    const json& cj = src_json.at("certificate");
    PECertificate c;
    const std::string kind = cj.at("kind").get<std::string>();
    c.kind = kind == "udpe_annulus" ? CertificateKind::udpe_annulus
             : kind == "mornar_scalar" ? CertificateKind::mornar_scalar
                                       : CertificateKind::classical_gram;
    c.T = cj.at("T").get<double>();
    c.mu = cj.at("mu").get<double>();
    c.valid_t_range = {cj.at("valid_t_range")[0].get<double>(),
                       cj.at("valid_t_range")[1].get<double>()};
    const PECertificate pc = power_certificate(c, p.at("p").get<double>());
    r.ok = true;
    r.payload["certified"] = true;
    r.payload["certificate"] = pc.to_json();
    return r;
  }
  if (e.op == "filtered_pe") {
    const StateFunction f =
        build_state_function(signal_decl(cfg, p.at("function").get<std::string>()));
    FilteredPeOptions opt;
    opt.T0 = p.value("T0", 1.0);
    opt.burn_in = p.value("burn_in", 5.0);
    opt.sol_bound = p.value("sol_bound", 1e6);
    const double damping = p.value("damping", 1.0);
    const auto out = filtered_pe_check(
        f, [damping](double, const Vector&) { return damping; },
        vec_from(p.at("z")), vec_from(p.at("phi_f0")),
        p.at("horizon").get<double>(), q, opt);
    if (std::holds_alternative<PECertificate>(out)) {
      r.ok = true;
      r.payload["certified"] = true;
      r.payload["certificate"] = std::get<PECertificate>(out).to_json();
    } else if (std::holds_alternative<PeCounterexample>(out)) {
      r.ok = false;
      r.payload["certified"] = false;
      r.payload["counterexample"] = std::get<PeCounterexample>(out).to_json();
    } else {
      const auto& hv = std::get<HypothesisViolation>(out);
      r.ok = false;
      r.payload["certified"] = false;
      r.payload["hypothesis_violation"] = {
          {"t", hv.t}, {"norm", hv.norm}, {"bound", hv.bound}};
    }
    return r;
  }
  if (e.op == "mornar") {
    const TimeSignal P = resolve_time_signal(cfg, p, "signal");
    MornarOptions opt;
    opt.T_burn = p.value("T_burn", 20.0);
    opt.quad = q;
    std::vector<Vector> dirs;
    if (p.contains("directions") && p.at("directions").is_array()) {
      for (const auto& d : p.at("directions")) dirs.push_back(vec_from(d));
      for (auto& d : dirs) d.normalize();
    } else {
      dirs = sphere_directions(P.rows(), p.value("directions", 4));
    }
    const auto out = mornar_scalar_pe(P, dirs, grid_from(p.at("t0_grid")),
                                      p.at("horizon").get<double>(), opt);
    r.ok = out.certificate.has_value();
    r.payload["certified"] = r.ok;
    json fits = json::array();
    for (const auto& f : out.fits) {
      json jf;
      jf["a"] = f.a;
      jf["b"] = f.b;
      jf["flat"] = f.flat;
      json dir = json::array();
      for (Eigen::Index i = 0; i < f.direction.size(); ++i)
        dir.push_back(f.direction[i]);
      jf["direction"] = dir;
      fits.push_back(jf);
    }
    r.payload["fits"] = fits;
    if (out.certificate) r.payload["certificate"] = out.certificate->to_json();
    if (out.counterexample)
      r.payload["counterexample"] = out.counterexample->to_json();
    return r;
  }
  throw ConfigError("config: op '" + e.op + "' is not a certify op");
}

double effective_step(const RunContext& ctx, const json& p, double dflt) {
  if (ctx.step_override) return *ctx.step_override;
  return p.value("ode_step", dflt);
}

struct SummaryRow {
  std::string label;
  bool pass = false;
  std::string detail;
};

int write_summary(const std::string& dir, const std::vector<SummaryRow>& rows,
                  const RunContext& ctx) {
  std::ostringstream txt;
  json jrows = json::array();
  bool all = true;
  for (const auto& r : rows) {
    txt << r.label << ": " << (r.pass ? "PASS" : "FAIL");
    if (!r.detail.empty()) txt << " (" << r.detail << ")";
    txt << '\n';
    jrows.push_back({{"label", r.label}, {"pass", r.pass}, {"detail", r.detail}});
    all = all && r.pass;
  }
  write_file_atomic(dir + "/summary.txt", txt.str());
  write_file_atomic(dir + "/summary.json", json{{"rows", jrows}}.dump(2) + "\n");
  if (!ctx.quiet) std::fputs(txt.str().c_str(), stdout);
  return all ? 0 : 2;
}

}  // namespace

namespace {

bool is_certify_op(const std::string& op) {
  return op == "classical_pe" || op == "udpe" || op == "pointwise_scan" ||
         op == "certificate_map" || op == "power" || op == "filtered_pe" ||
         op == "mornar";
}

}  // namespace

int run_certify(const ExperimentConfig& cfg, const RunContext& ctx) {
  const std::string dir = ctx.out_dir + "/" + cfg.name;
  write_file_atomic(dir + "/config_used.json", cfg.to_json().dump(2) + "\n");
  bool all_ok = true;
  std::map<std::string, json> prior;
  for (const auto& e : cfg.analysis) {
    if (!is_certify_op(e.op)) continue;
    const EntryResult r = run_entry(cfg, e, ctx, prior);
    prior[e.name] = r.payload;
    json out = r.payload;
    out["analysis"] = e.name;
    out["op"] = e.op;
    out["seed"] = cfg.seed;
    write_file_atomic(dir + "/" + e.name + ".json", out.dump(2) + "\n");
    if (!ctx.quiet)
      std::printf("%s: %s\n", e.name.c_str(),
                  r.ok ? "certificate" : "counterexample");
    all_ok = all_ok && r.ok;
  }
  return all_ok ? 0 : 2;
}

int run_simulate(const ExperimentConfig& cfg, const RunContext& ctx) {
  const std::string dir = ctx.out_dir + "/" + cfg.name;
  write_file_atomic(dir + "/config_used.json", cfg.to_json().dump(2) + "\n");
  const BuiltSystem built = build_system(cfg.system, cfg.signals);
  for (const auto& e : cfg.analysis) {
    if (e.op != "simulate") continue;
    const json& p = e.params;
    const double step = effective_step(ctx, p, 1e-3);
    const double horizon = p.at("horizon").get<double>();
    std::vector<double> t0s = p.contains("t0_grid")
                                  ? grid_from(p.at("t0_grid"))
                                  : std::vector<double>{p.value("t0", 0.0)};
    std::vector<Vector> x0s;
    if (p.contains("x0")) {
      x0s.push_back(vec_from(p.at("x0")));
    } else {
      const double radius = p.value("radius", 1.0);
      for (const auto& d :
           sphere_directions(built.sys.dim, p.value("directions", 4)))
        x0s.push_back(radius * d);
    }
    std::vector<SvgSeries> series;
    json report;
    report["runs"] = json::array();
    for (size_t i = 0; i < t0s.size(); ++i)
      for (size_t j = 0; j < x0s.size(); ++j) {
        const Trajectory traj =
            integrate(built.sys, t0s[i], x0s[j], t0s[i] + horizon, step);
        std::ostringstream csv;
        write_trajectory_csv(traj, csv);
        const std::string stem =
            e.name + "_t" + std::to_string(i) + "_d" + std::to_string(j);
        write_file_atomic(dir + "/" + stem + ".csv", csv.str());
        SvgSeries s;
        s.label = "t0=" + fmt_g17(t0s[i]) + " d" + std::to_string(j);
        const size_t stride = std::max<size_t>(1, traj.times.size() / 2000);
        for (size_t k = 0; k < traj.times.size(); k += stride)
          s.points.push_back({traj.times[k], traj.states[k].norm()});
        series.push_back(std::move(s));
        json run;
        run["t0"] = t0s[i];
        run["final_norm"] = traj.back().norm();
        run["escaped"] = traj.flags.escaped;
        report["runs"].push_back(run);
      }
    if (p.value("svg", true))
      write_file_atomic(dir + "/" + e.name + ".svg", svg_norm_plot(series));
    write_file_atomic(dir + "/" + e.name + ".json", report.dump(2) + "\n");
  }
  return 0;
}

int run_uniformity(const ExperimentConfig& cfg, const RunContext& ctx) {
  const std::string dir = ctx.out_dir + "/" + cfg.name;
  write_file_atomic(dir + "/config_used.json", cfg.to_json().dump(2) + "\n");
  const BuiltSystem built = build_system(cfg.system, cfg.signals);
  int code = 0;
  for (const auto& e : cfg.analysis) {
    const json& p = e.params;
    if (e.op == "uniformity") {
      ProbeOptions opt;
      opt.threads = ctx.threads;
      const UniformityReport rep = uniformity_probe(
          built.sys, p.value("r", 1.0), p.at("sigma").get<double>(),
          grid_from(p.at("t0_grid")), p.value("directions", 4),
          p.at("horizon").get<double>(), effective_step(ctx, p, 1e-3), opt);
      write_file_atomic(dir + "/" + e.name + ".json",
                        rep.to_json().dump(2) + "\n");
      std::ostringstream csv;
      rep.write_settling_csv(csv);
      write_file_atomic(dir + "/" + e.name + "_settling.csv", csv.str());
      if (!ctx.quiet)
        std::printf("%s: verdict %s\n", e.name.c_str(),
                    to_string(rep.verdict).c_str());
    } else if (e.op == "ugs") {
      std::vector<double> radii;
      for (const auto& v : p.at("radii")) radii.push_back(v.get<double>());
      const UgsEnvelope env = ugs_probe(
          built.sys, radii, grid_from(p.at("t0_grid")),
          p.value("directions", 4), p.at("horizon").get<double>(),
          effective_step(ctx, p, 1e-3));
      write_file_atomic(dir + "/" + e.name + ".json",
                        env.to_json().dump(2) + "\n");
      if (env.violated) code = 2;
    } else if (e.op == "ules_fit") {
      const auto out = ules_fit(built.sys, p.value("r", 1.0),
                                grid_from(p.at("t0_grid")),
                                p.value("directions", 4),
                                p.at("horizon").get<double>(),
                                effective_step(ctx, p, 1e-3));
      json o;
      if (std::holds_alternative<ExpFit>(out)) {
        const auto& f = std::get<ExpFit>(out);
        o["fit"] = {{"gamma1", f.gamma1},
                    {"gamma2", f.gamma2},
                    {"residual", f.residual},
                    {"r", f.r}};
      } else {
        o["failure"] = std::get<UlesFailure>(out).reason;
      }
      write_file_atomic(dir + "/" + e.name + ".json", o.dump(2) + "\n");
    } else if (e.op == "necessity") {
      ProbeOptions opt;
      opt.threads = ctx.threads;
      const UniformityReport rep = uniformity_probe(
          built.sys, p.value("r", 1.0), p.at("sigma").get<double>(),
          grid_from(p.at("t0_grid")), p.value("directions", 4),
          p.at("horizon").get<double>(), effective_step(ctx, p, 1e-3), opt);
      const StateFunction F = as_state_function(built.sys, {-1e5, 1e5});
      const AnnulusGrid grid = AnnulusGrid::build(
          built.sys.dim, 0, p.value("delta", 1.0), p.value("Delta", 2.0),
          grid_from(p.at("t_samples")), p.value("n_dir", 16),
          p.value("n_rad", 2));
      const NecessityCell cell = necessity_experiment(
          F, rep.verdict, grid, p.at("T").get<double>(), quad_from(p),
          ctx.threads);
      json o = cell.to_json();
      o["uniformity_report"] = rep.to_json();
      write_file_atomic(dir + "/" + e.name + ".json", o.dump(2) + "\n");
      if (!cell.consistent) code = 2;
    }
  }
  return code;
}

// ---------------------------------------------------------------------------
// Bundled experiments
// ---------------------------------------------------------------------------

namespace {

constexpr double kTwoPi = 6.283185307179586;

ExperimentConfig parse_text(const std::string& name, const std::string& text) {
  ExperimentConfig c = ExperimentConfig::parse(json::parse(text), name);
  c.name = name;
  return c;
}

std::string eg31_config_text() {
  json j;
  j["name"] = "eg31";
  j["seed"] = 1;
  j["signals"] = json::array({json{{"name", "psi"},
                                   {"builtin", "rotating_projection"}}});
  j["analysis"] = json::array(
      {json{{"name", "udpe_psi"},
            {"op", "udpe"},
            {"params",
             {{"function", "psi"},
              {"delta", 1.0},
              {"Delta", 1.0},
              {"T", kTwoPi},
              {"n_dir", 16},
              {"n_rad", 1},
              {"t_grid", {{"lo", 0.0}, {"hi", kTwoPi}, {"count", 8}}}}}}});
  return j.dump(2) + "\n";
}

std::string x2_config_text() {
  json j;
  j["name"] = "x2_wrt_x1";
  j["seed"] = 1;
  j["signals"] = json::array(
      {json{{"name", "f"},
            {"builtin", "component_pick"},
            {"params", {{"n", 2}, {"index", 1}, {"n1", 1}}}}});
  j["analysis"] = json::array(
      {json{{"name", "udpe_x2"},
            {"op", "udpe"},
            {"params",
             {{"function", "f"},
              {"delta", 1.0},
              {"Delta", 1.0},
              {"T", kTwoPi},
              {"n_dir", 4},
              {"n_rad", 1},
              {"t_grid", {{"lo", 0.0}, {"hi", kTwoPi}, {"count", 4}}}}}}});
  return j.dump(2) + "\n";
}

SlotineLiSystem slotli_pe_system() {
  ControllerConfig cfg;
  cfg.K_d = Matrix::Identity(1, 1) * 10.0;
  cfg.lambda = 0.5;
  cfg.gamma = 200.0;
  return make_slotine_li(make_pendulum_el(), sine_reference(1), cfg);
}

SlotineLiSystem slotli_nope_system() {
  ControllerConfig cfg;
  cfg.K_d = Matrix::Identity(1, 1) * 5.0;
  cfg.lambda = 1.0;
  cfg.gamma = 2.0;
  return make_slotine_li(make_pendulum_el(), zero_reference(1), cfg);
}

Vector slotli_pe_x0() {
  Vector y0 = Vector::Zero(4);
  y0[2] = 0.02;
  y0[3] = -0.02;
  return y0;
}

Vector slotli_nope_x0() {
  Vector y0 = Vector::Zero(4);
  y0[0] = 0.3;
  y0[2] = 0.5;
  y0[3] = -0.5;
  return y0;
}

std::vector<SummaryRow> reproduce_eg31(const std::string& dir,
                                       const RunContext& ctx) {
  std::vector<SummaryRow> rows;
  RunContext sub = ctx;
  sub.out_dir = dir;
  sub.quiet = true;

  const ExperimentConfig eg = parse_text("eg31", eg31_config_text());
  write_file_atomic(dir + "/eg31.json", eg31_config_text());
  const int code1 = run_certify(eg, sub);
  rows.push_back({"udpe_certificate_exit_0", code1 == 0, ""});

  // mu within 5% of 4 * delta.
  const StateFunction psi = signals::rotating_projection();
  const AnnulusGrid grid = AnnulusGrid::build(
      2, 0, 1.0, 1.0,
      grid_from(json{{"lo", 0.0}, {"hi", kTwoPi}, {"count", 8}}), 16, 1);
  const auto out = udpe_certificate(psi, grid, kTwoPi, QuadratureSpec{});
  const double mu = certified(out) ? certificate(out).mu : 0.0;
  rows.push_back({"udpe_mu_within_5pct_of_4delta",
                  certified(out) && std::abs(mu - 4.0) <= 0.2,
                  "mu=" + fmt_g17(mu)});

  // Along-trajectory wrapper evaluates to zero excitation.
  const StateFunction along = signals::of_time(
      [](double t) {
        Vector v(1);
        v[0] = std::cos(t) * std::sin(t) - std::sin(t) * std::cos(t);
        return v;
      },
      {-1e6, 1e6}, "psi_along_rotation");
  Vector dummy(1);
  dummy << 1.0;
  const double along_int =
      window_integral_norm(along, dummy, 0.0, kTwoPi, QuadratureSpec{});
  rows.push_back({"along_trajectory_integral_zero", along_int <= 1e-9,
                  "integral=" + fmt_g17(along_int)});

  const ExperimentConfig x2 = parse_text("x2_wrt_x1", x2_config_text());
  write_file_atomic(dir + "/x2_wrt_x1.json", x2_config_text());
  const int code2 = run_certify(x2, sub);
  rows.push_back({"x2_wrt_x1_counterexample_exit_2", code2 == 2, ""});
  return rows;
}

std::vector<SummaryRow> reproduce_mornar(const std::string& dir,
                                         const RunContext&) {
  std::vector<SummaryRow> rows;
  Vector one(1);
  one << 1.0;
  const std::vector<double> t0s = grid_from(json{{"lo", 0.0}, {"hi", 60.0},
                                                 {"count", 7}});
  {
    const auto out =
        mornar_scalar_pe(signals::identity(1), {one}, t0s, 100.0);
    const bool ok = out.certificate &&
                    std::abs(out.certificate->mu - 1.0) < 1e-6 &&
                    std::abs(out.certificate->params.at("b")) < 1e-6;
    rows.push_back({"identity_slope_1_intercept_0", ok, ""});
    write_file_atomic(dir + "/identity.json",
                      json{{"certified", out.certificate.has_value()}}.dump(2) +
                          "\n");
  }
  {
    const auto out = mornar_scalar_pe(signals::abs_sine(), {one}, t0s, 100.0);
    const double target = 2.0 / M_PI;
    const bool ok = out.certificate &&
                    std::abs(out.certificate->mu - target) <= 0.05 * target;
    rows.push_back({"abs_sine_slope_near_2_over_pi", ok,
                    out.certificate ? "a=" + fmt_g17(out.certificate->mu) : ""});
  }
  {
    const auto out =
        mornar_scalar_pe(signals::inverse_one_plus_t(), {one}, t0s, 100.0);
    rows.push_back({"decay_flat_counterexample",
                    out.counterexample.has_value(), ""});
  }
  return rows;
}

std::vector<SummaryRow> reproduce_mrac(const std::string& dir,
                                       const RunContext& ctx, bool pe) {
  std::vector<SummaryRow> rows;
  const MatchingSystem m = make_gradient_adaptive(
      pe ? signals::sine() : signals::inverse_one_plus_t(), -1.0, 1.0);
  const std::vector<double> t0s = {0.0, 7.3, 40.0, 100.0};
  ProbeOptions opt;
  opt.threads = ctx.threads;
  const double step = ctx.step_override.value_or(1e-3);
  const double sigma = pe ? 0.01 : 0.6;
  const UniformityReport rep =
      uniformity_probe(m.sys, 1.0, sigma, t0s, 8, 250.0, step, opt);
  write_file_atomic(dir + "/uniformity.json", rep.to_json().dump(2) + "\n");
  std::ostringstream csv;
  rep.write_settling_csv(csv);
  write_file_atomic(dir + "/settling.csv", csv.str());

  std::vector<SvgSeries> series;
  double worst_final = 0.0;
  for (double t0 : t0s) {
    const Trajectory traj =
        integrate(m.sys, t0, Vector(Vector::Ones(2) / std::sqrt(2.0)),
                  t0 + 200.0, step);
    worst_final = std::max(worst_final, traj.back().norm());
    SvgSeries s;
    s.label = "t0=" + fmt_g17(t0);
    const size_t stride = std::max<size_t>(1, traj.times.size() / 2000);
    for (size_t k = 0; k < traj.times.size(); k += stride)
      s.points.push_back({traj.times[k] - t0, traj.states[k].norm()});
    series.push_back(std::move(s));
  }
  write_file_atomic(dir + "/norms.svg", svg_norm_plot(series));

  if (pe) {
    rows.push_back({"verdict_uniform", rep.verdict == Verdict::uniform,
                    "dispersion=" + fmt_g17(rep.dispersion)});
    rows.push_back({"dispersion_below_0.25", rep.dispersion < 0.25, ""});
    rows.push_back({"final_norm_below_1e-3", worst_final < 1e-3,
                    "worst=" + fmt_g17(worst_final)});
  } else {
    const bool non_uniform_or_growing =
        rep.verdict == Verdict::non_uniform ||
        (rep.verdict == Verdict::inconclusive && rep.growing_settling());
    rows.push_back({"verdict_non_uniform_or_growing", non_uniform_or_growing,
                    to_string(rep.verdict)});
  }
  return rows;
}

std::vector<SummaryRow> reproduce_feedforward(const std::string& dir,
                                              const RunContext& ctx) {
  std::vector<SummaryRow> rows;
  const TimeSignal g = signals::sine();
  InputMap gm = [g](double t, const Vector&, const Vector&) { return g(t); };
  LyapunovFn V;
  V.value = [](double, const Vector& xi) { return 0.5 * xi.squaredNorm(); };
  V.grad = [](double, const Vector& xi) { return xi; };
  auto drift = [](double, const Vector& xi) {
    return Vector(-xi.array().cube());
  };
  const FeedforwardSystem f =
      make_feedforward_bounded(drift, 1, gm, 1, V, "feedforward_cubic");
  const double step = ctx.step_override.value_or(1e-3);
  Vector y0(2);
  y0 << 1.0, 0.0;
  const Trajectory traj = integrate(f.sys, 0.0, y0, 200.0, step);
  double max_w_rise = -1e300;
  double prev = f.W(traj.times[0], traj.states[0]);
  for (size_t i = 1; i < traj.times.size(); ++i) {
    const double w = f.W(traj.times[i], traj.states[i]);
    max_w_rise = std::max(max_w_rise, w - prev);
    prev = w;
  }
  rows.push_back({"W_nonincreasing_along_trajectory", max_w_rise <= 1e-9,
                  "max_rise=" + fmt_g17(max_w_rise)});
  rows.push_back({"final_norm_below_1e-2", traj.back().norm() < 1e-2,
                  "final=" + fmt_g17(traj.back().norm())});
  const UgsEnvelope env =
      ugs_probe(f.sys, {0.5, 1.0, 2.0}, {0.0, 10.0}, 4, 60.0, step);
  rows.push_back({"ugs_envelope_finite", !env.violated, ""});
  json o = env.to_json();
  write_file_atomic(dir + "/ugs.json", o.dump(2) + "\n");
  return rows;
}

std::vector<SummaryRow> reproduce_driftless(const std::string& dir,
                                            const RunContext& ctx) {
  std::vector<SummaryRow> rows;
  const TimeSignal g = signals::sine();
  InputMap gm = [g](double t, const Vector&, const Vector&) { return g(t); };
  const FeedforwardSystem f = make_driftless(gm, 1, 1);
  const double step = ctx.step_override.value_or(1e-3);
  Vector y0(2);
  y0 << 1.0, 0.0;
  const Trajectory traj = integrate(f.sys, 0.0, y0, 200.0, step);
  rows.push_back({"final_norm_below_1e-2", traj.back().norm() < 1e-2,
                  "final=" + fmt_g17(traj.back().norm())});
  // Excitation of the input channel at zero input.
  const StateFunction g0 = signals::linear_in_state(g);
  Vector x(1);
  x << 1.0;
  ScanOptions sopt;
  sopt.T0 = kTwoPi;
  sopt.t_grid = grid_from(json{{"lo", 0.0}, {"hi", kTwoPi}, {"count", 8}});
  const auto scan = pointwise_pe_scan(g0, x, 4.0 * kTwoPi, QuadratureSpec{},
                                      sopt);
  rows.push_back({"input_channel_excited", scan.has_value(),
                  scan ? "mu=" + fmt_g17(scan->mu) : ""});
  std::ostringstream csv;
  write_trajectory_csv(traj, csv);
  write_file_atomic(dir + "/trajectory.csv", csv.str());
  return rows;
}

std::vector<SummaryRow> reproduce_slotli(const std::string& dir,
                                         const RunContext& ctx, bool pe) {
  std::vector<SummaryRow> rows;
  const double step = ctx.step_override.value_or(1e-3);
  if (pe) {
    const SlotineLiSystem sl = slotli_pe_system();
    const auto cert = classical_pe_certificate(
        sl.Phi, kTwoPi, QuadratureSpec{},
        grid_from(json{{"lo", 0.0}, {"hi", kTwoPi}, {"count", 8}}));
    rows.push_back({"regressor_pe_certified", certified(cert),
                    certified(cert) ? "mu=" + fmt_g17(certificate(cert).mu)
                                    : ""});
    double worst = 0.0, worst_halved_diff = 0.0;
    for (double t0 : {0.0, 25.0}) {
      const Trajectory a =
          integrate(sl.sys, t0, slotli_pe_x0(), t0 + 200.0, step);
      const Trajectory b =
          integrate(sl.sys, t0, slotli_pe_x0(), t0 + 200.0, 0.5 * step);
      worst = std::max(worst, a.back().norm());
      worst_halved_diff = std::max(
          worst_halved_diff, std::abs(a.back().norm() - b.back().norm()));
      std::ostringstream csv;
      write_trajectory_csv(a, csv);
      write_file_atomic(dir + "/traj_t0_" + fmt_g17(t0) + ".csv", csv.str());
    }
    rows.push_back({"param_error_final < 1e-3", worst < 1e-3,
                    "worst=" + fmt_g17(worst)});
    rows.push_back({"step_halved_agreement_1e-6", worst_halved_diff < 1e-6,
                    "diff=" + fmt_g17(worst_halved_diff)});
  } else {
    const SlotineLiSystem sl = slotli_nope_system();
    const auto cert = classical_pe_certificate(
        sl.Phi, kTwoPi, QuadratureSpec{},
        grid_from(json{{"lo", 0.0}, {"hi", kTwoPi}, {"count", 8}}));
    rows.push_back({"regressor_counterexample", !certified(cert), ""});
    const Vector y0 = slotli_nope_x0();
    const Trajectory traj = integrate(sl.sys, 0.0, y0, 200.0, step);
    const Vector yf = traj.back();
    const double tracking = yf.head(2).norm();
    const double theta_ratio = yf.tail(2).norm() / y0.tail(2).norm();
    rows.push_back({"tracking_error_below_1e-4", tracking < 1e-4,
                    "tracking=" + fmt_g17(tracking)});
    rows.push_back({"param_error_retained_90pct", theta_ratio >= 0.9,
                    "ratio=" + fmt_g17(theta_ratio)});
    std::ostringstream csv;
    write_trajectory_csv(traj, csv);
    write_file_atomic(dir + "/trajectory.csv", csv.str());
  }
  return rows;
}

struct SweepEntry {
  std::string name;
  OdeSystem sys;
  double sigma;
  double horizon;
  std::vector<double> t0s;
  double T;
};

std::vector<SummaryRow> reproduce_necessity(const std::string& dir,
                                            const RunContext& ctx) {
  std::vector<SummaryRow> rows;
  std::vector<SweepEntry> entries;
  entries.push_back({"scalar_linear", make_scalar_linear(), 0.1, 60.0,
                     {0.0, 10.0, 50.0}, 2.0});
  entries.push_back({"scalar_decay", make_scalar_decay(), 0.1, 520.0,
                     {0.0, 10.0, 50.0}, 2.0});
  entries.push_back({"planar_rotation", make_planar_rotation(), 0.5, 60.0,
                     {0.0, 10.0, 50.0}, kTwoPi});
  entries.push_back({"mrac_sine",
                     make_gradient_adaptive(signals::sine(), -1.0, 1.0).sys,
                     0.01, 250.0, {0.0, 7.3, 40.0, 100.0}, kTwoPi});
  entries.push_back(
      {"mrac_decay",
       make_gradient_adaptive(signals::inverse_one_plus_t(), -1.0, 1.0).sys,
       0.6, 250.0, {0.0, 7.3, 40.0, 100.0}, kTwoPi});
  {
    const TimeSignal g = signals::sine();
    InputMap gm = [g](double t, const Vector&, const Vector&) { return g(t); };
    entries.push_back({"driftless_sine", make_driftless(gm, 1, 1).sys, 0.01,
                       120.0, {0.0, 10.0, 50.0}, kTwoPi});
  }
  entries.push_back({"slotine_li_pe", slotli_pe_system().sys, 0.5, 120.0,
                     {0.0, 25.0}, kTwoPi});

  const double step = ctx.step_override.value_or(1e-3);
  json table = json::array();
  bool flagged_cell_empty = true;
  for (const auto& entry : entries) {
    ProbeOptions popt;
    popt.threads = ctx.threads;
    const UniformityReport rep = uniformity_probe(
        entry.sys, 1.0, entry.sigma, entry.t0s, 6, entry.horizon, step, popt);
    const StateFunction F = as_state_function(entry.sys, {-1e5, 1e5});
    const AnnulusGrid grid = AnnulusGrid::build(
        entry.sys.dim, 0, 1.0, 2.0,
        grid_from(json{{"lo", 0.0}, {"hi", 150.0}, {"count", 6}}), 12, 2);
    const NecessityCell cell = necessity_experiment(
        F, rep.verdict, grid, entry.T, QuadratureSpec{}, ctx.threads);
    json o = cell.to_json();
    o["system"] = entry.name;
    table.push_back(o);
    if (!cell.consistent) flagged_cell_empty = false;
    rows.push_back({entry.name + "_consistent", cell.consistent,
                    to_string(cell.uniformity) + "/" +
                        (cell.udpe_certified ? "udpe" : "not-udpe")});
  }
  write_file_atomic(dir + "/contingency.json", table.dump(2) + "\n");
  rows.push_back({"uniform_and_not_udpe_cell_empty", flagged_cell_empty, ""});
  return rows;
}

}  // namespace

const std::vector<std::string>& reproduce_names() {
  static const std::vector<std::string> names = {
      "eg31",      "mornar",     "mrac-pe",   "mrac-nope", "feedforward",
      "driftless", "slotli-pe",  "slotli-nope", "necessity"};
  return names;
}

int run_reproduce(const std::string& name, const RunContext& ctx) {
  const std::string dir = ctx.out_dir + "/" + name;
  std::vector<SummaryRow> rows;
  if (name == "eg31")
    rows = reproduce_eg31(dir, ctx);
  else if (name == "mornar")
    rows = reproduce_mornar(dir, ctx);
  else if (name == "mrac-pe")
    rows = reproduce_mrac(dir, ctx, true);
  else if (name == "mrac-nope")
    rows = reproduce_mrac(dir, ctx, false);
  else if (name == "feedforward")
    rows = reproduce_feedforward(dir, ctx);
  else if (name == "driftless")
    rows = reproduce_driftless(dir, ctx);
  else if (name == "slotli-pe")
    rows = reproduce_slotli(dir, ctx, true);
  else if (name == "slotli-nope")
    rows = reproduce_slotli(dir, ctx, false);
  else if (name == "necessity")
    rows = reproduce_necessity(dir, ctx);
  else {
    std::string msg = "unknown experiment '" + name + "'; available:";
    for (const auto& n : reproduce_names()) msg += " " + n;
    throw ConfigError(msg);
  }
  return write_summary(dir, rows, ctx);
}

}  // namespace pelab
