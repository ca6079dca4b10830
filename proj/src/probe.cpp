#include "pelab/probe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pelab {

using nlohmann::json;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

json finite_or_inf(double v) {
  if (std::isinf(v)) return json("inf");
  return json(v);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::uniform: return "uniform";
    case Verdict::non_uniform: return "non_uniform";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "unknown";
}

double settling_time(const Trajectory& traj, double sigma) {
  if (!(sigma > 0.0)) throw ContractError("settling_time: sigma must be > 0");
  if (traj.flags.escaped) return kInf;
  long last_above = -1;
  for (long i = static_cast<long>(traj.states.size()) - 1; i >= 0; --i) {
    if (traj.states[i].norm() > sigma) {
      last_above = i;
      break;
    }
  }
  if (last_above < 0) return 0.0;
  if (last_above + 1 >= static_cast<long>(traj.times.size())) return kInf;
  return traj.times[last_above + 1] - traj.t0;
}

bool UniformityReport::growing_settling() const {
  // Sort by t0, require finite values nondecreasing and no settled start
  // after an unsettled one.
  std::vector<size_t> idx(t0_grid.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::sort(idx.begin(), idx.end(),
            [&](size_t a, size_t b) { return t0_grid[a] < t0_grid[b]; });
  double prev = -kInf;
  bool seen_inf = false;
  for (size_t i : idx) {
    const double v = settling[i];
    if (std::isinf(v)) {
      seen_inf = true;
      continue;
    }
    if (seen_inf) return false;
    if (v < prev - 1e-12) return false;
    prev = v;
  }
  return settling.size() >= 2 && prev > 0.0;
}

json UniformityReport::to_json() const {
  json o;
  o["r"] = r;
  o["sigma"] = sigma;
  o["t0_grid"] = t0_grid;
  json st = json::array();
  for (double v : settling) st.push_back(finite_or_inf(v));
  o["settling"] = st;
  json by_dir = json::array();
  for (const auto& row : settling_by_dir) {
    json jr = json::array();
    for (double v : row) jr.push_back(finite_or_inf(v));
    by_dir.push_back(jr);
  }
  o["settling_by_direction"] = by_dir;
  o["dispersion"] = finite_or_inf(dispersion);
  o["trend"] = trend;
  o["verdict"] = to_string(verdict);
  return o;
}

void UniformityReport::write_settling_csv(std::ostream& os) const {
  os << "t0,direction_index,T\n";
  for (size_t i = 0; i < t0_grid.size(); ++i)
    for (size_t d = 0; d < settling_by_dir[i].size(); ++d) {
      const double v = settling_by_dir[i][d];
      os << fmt_g17(t0_grid[i]) << ',' << d << ','
         << (std::isinf(v) ? "inf" : fmt_g17(v)) << '\n';
    }
}

UniformityReport uniformity_probe(const OdeSystem& sys, double r, double sigma,
                                  const std::vector<double>& t0_grid,
                                  int x0_directions, double horizon,
                                  double step, const ProbeOptions& opt) {
  if (t0_grid.empty()) throw ContractError("uniformity_probe: empty t0_grid");
  UniformityReport rep;
  rep.r = r;
  rep.sigma = sigma;
  rep.t0_grid = t0_grid;

  const auto dirs = sphere_directions(sys.dim, x0_directions);
  const int n_jobs = static_cast<int>(t0_grid.size() * dirs.size());
  std::vector<double> flat(n_jobs, kInf);
  parallel_for(n_jobs, opt.threads, [&](int k) {
    const size_t i = k / dirs.size();
    const size_t d = k % dirs.size();
    IntegrateOptions io;
    io.escape_radius = opt.escape_radius;
    const Trajectory traj = integrate(sys, t0_grid[i], Vector(r * dirs[d]),
                                      t0_grid[i] + horizon, step, io);
    flat[k] = settling_time(traj, sigma);
  });

  rep.settling_by_dir.resize(t0_grid.size());
  rep.settling.resize(t0_grid.size());
  for (size_t i = 0; i < t0_grid.size(); ++i) {
    auto& row = rep.settling_by_dir[i];
    row.assign(flat.begin() + i * dirs.size(),
               flat.begin() + (i + 1) * dirs.size());
    rep.settling[i] = *std::max_element(row.begin(), row.end());
  }

  const bool any_settled =
      std::any_of(rep.settling.begin(), rep.settling.end(),
                  [](double v) { return std::isfinite(v); });
  const bool all_settled =
      std::all_of(rep.settling.begin(), rep.settling.end(),
                  [](double v) { return std::isfinite(v); });
  if (!any_settled) {
    rep.dispersion = kInf;
    rep.trend = 0.0;
    rep.verdict = Verdict::inconclusive;
    return rep;
  }
  if (all_settled) {
    const double mx = *std::max_element(rep.settling.begin(), rep.settling.end());
    const double mn = *std::min_element(rep.settling.begin(), rep.settling.end());
    const double med = median(rep.settling);
    rep.dispersion = med > 0.0 ? (mx - mn) / med : (mx > mn ? kInf : 0.0);
  } else {
    rep.dispersion = kInf;
  }
  rep.trend = spearman(rep.t0_grid, rep.settling);

  if (rep.dispersion > opt.dispersion_threshold &&
      rep.trend >= opt.trend_threshold) {
    rep.verdict = Verdict::non_uniform;
  } else if (all_settled && rep.dispersion <= opt.dispersion_threshold) {
    rep.verdict = Verdict::uniform;
  } else {
    rep.verdict = Verdict::inconclusive;
  }
  return rep;
}

json UgsEnvelope::to_json() const {
  json o;
  o["radii"] = radii;
  o["gamma_hat"] = gamma_hat;
  o["violated"] = violated;
  if (violated) {
    o["witness_radius"] = witness_radius;
    o["witness_t0"] = witness_t0;
  }
  return o;
}

UgsEnvelope ugs_probe(const OdeSystem& sys, const std::vector<double>& radii,
                      const std::vector<double>& t0_grid, int directions,
                      double horizon, double step, const ProbeOptions& opt) {
  UgsEnvelope env;
  env.radii = radii;
  std::sort(env.radii.begin(), env.radii.end());
  const auto dirs = sphere_directions(sys.dim, directions);
  std::vector<double> sup(env.radii.size(), 0.0);
  for (size_t ri = 0; ri < env.radii.size(); ++ri) {
    for (double t0 : t0_grid) {
      for (const auto& d : dirs) {
        IntegrateOptions io;
        io.escape_radius = opt.escape_radius;
        const Trajectory traj = integrate(sys, t0, Vector(env.radii[ri] * d),
                                          t0 + horizon, step, io);
        if (traj.flags.escaped) {
          env.violated = true;
          env.witness_radius = env.radii[ri];
          env.witness_t0 = t0;
          return env;
        }
        for (const auto& x : traj.states) sup[ri] = std::max(sup[ri], x.norm());
      }
    }
  }
  double run = 0.0;
  for (double s : sup) {
    run = std::max(run, s);
    env.gamma_hat.push_back(run);
  }
  return env;
}

namespace {

struct TailFit {
  double slope_full = 0.0;
  double slope_first = 0.0;
  double slope_second = 0.0;
  bool usable = false;
};

double ols_slope(const std::vector<double>& t, const std::vector<double>& y,
                 size_t lo, size_t hi) {
  const size_t n = hi - lo;
  if (n < 2) return 0.0;
  double mt = 0.0, my = 0.0;
  for (size_t i = lo; i < hi; ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double num = 0.0, den = 0.0;
  for (size_t i = lo; i < hi; ++i) {
    num += (t[i] - mt) * (y[i] - my);
    den += (t[i] - mt) * (t[i] - mt);
  }
  return den > 0.0 ? num / den : 0.0;
}

TailFit fit_log_tail(const Trajectory& traj, double noise_floor,
                     double tail_fraction) {
  std::vector<double> ts, logs;
  for (size_t i = 0; i < traj.states.size(); ++i) {
    const double n = traj.states[i].norm();
    if (n < noise_floor) break;
    ts.push_back(traj.times[i]);
    logs.push_back(std::log(n));
  }
  TailFit fit;
  if (ts.size() < 8) return fit;
  const double span = ts.back() - ts.front();
  const double tail_start = ts.back() - tail_fraction * span;
  size_t lo = std::lower_bound(ts.begin(), ts.end(), tail_start) - ts.begin();
  if (ts.size() - lo < 8) return fit;
  const size_t mid = lo + (ts.size() - lo) / 2;
  fit.slope_full = ols_slope(ts, logs, lo, ts.size());
  fit.slope_first = ols_slope(ts, logs, lo, mid);
  fit.slope_second = ols_slope(ts, logs, mid, ts.size());
  fit.usable = true;
  return fit;
}

}  // namespace

UlesOutcome ules_fit(const OdeSystem& sys, double r,
                     const std::vector<double>& t0_grid, int directions,
                     double horizon, double step, const UlesOptions& opt) {
  const auto dirs = sphere_directions(sys.dim, directions);
  std::vector<Trajectory> trajs;
  for (double t0 : t0_grid)
    for (const auto& d : dirs)
      trajs.push_back(integrate(sys, t0, Vector(r * d), t0 + horizon, step));

  double gamma2 = kInf;
  for (const auto& traj : trajs) {
    if (traj.flags.escaped)
      return UlesFailure{"trajectory escaped", 0.0, 0.0};
    const TailFit fit =
        fit_log_tail(traj, opt.noise_floor, opt.tail_fraction);
    if (!fit.usable)
      return UlesFailure{"tail too short for a fit", 0.0, 0.0};
    if (fit.slope_full >= -opt.slope_floor)
      return UlesFailure{"log tail is flat", fit.slope_first,
                         fit.slope_second};
    if (std::abs(fit.slope_second) < opt.ratio_floor * std::abs(fit.slope_first))
      return UlesFailure{"log-tail slope decays: non-exponential",
                         fit.slope_first, fit.slope_second};
    gamma2 = std::min(gamma2, std::abs(fit.slope_full));
  }

  double gamma1 = 0.0;
  for (const auto& traj : trajs) {
    const double x0n = traj.x0.norm();
    if (x0n <= 0.0) continue;
    for (size_t i = 0; i < traj.states.size(); ++i) {
      const double n = traj.states[i].norm();
      if (n < opt.noise_floor) break;
      const double dt = traj.times[i] - traj.t0;
      gamma1 = std::max(gamma1, n / (x0n * std::exp(-gamma2 * dt)));
    }
  }
  ExpFit fit;
  fit.gamma1 = gamma1;
  fit.gamma2 = gamma2;
  fit.residual = std::log(std::max(gamma1, 1e-300));
  fit.r = r;
  return fit;
}

VjResult vj_plus_1(const StateFunction& phi1, double t, const Vector& x,
                   double H, const QuadratureSpec& q, double M, double tol) {
  if (!(H > 0.0) || !(M > 0.0))
    throw ContractError("vj_plus_1: H and M must be positive");
  double H_used = H;
  if (M * std::exp(-H_used) > tol)
    H_used = std::min(60.0, std::log(M / tol));
  const double limit = phi1.domain_t().hi - t;
  H_used = std::min(H_used, limit);
  if (!(H_used > 0.0))
    throw DomainError("vj_plus_1: no room past t in the signal domain");
  const double integral = integrate_window(
      [&](double tau) { return std::exp(t - tau) * phi1(tau, x).norm(); }, t,
      H_used, q);
  VjResult r;
  r.value = -integral;
  r.truncation_bound = M * std::exp(-H_used);
  r.horizon_used = H_used;
  return r;
}

LegoReport lego_check(const StateFunction& phi1, const Trajectory& traj,
                      const CertificateMap& theta_map, double K_Delta,
                      const RhoFn& rho, const QuadratureSpec& q,
                      const LegoOptions& opt) {
  if (opt.n1 <= 0 || opt.n1 > traj.dim())
    throw ContractError("lego_check: bad partition n1");
  if (opt.fd_step <= traj.step)
    throw ContractError(
        "lego_check: finite-difference step must exceed the trajectory grid");
  LegoReport rep;
  rep.max_violation = -kInf;
  const int n1 = opt.n1;
  const double h = opt.fd_step;
  for (size_t i = 0; i < traj.times.size(); i += opt.stride) {
    const double t = traj.times[i];
    if (t - h < traj.times.front() || t + h > traj.times.back()) continue;
    const Vector xm = sample(traj, t - h);
    const Vector xp = sample(traj, t + h);
    const Vector xc = traj.states[i];
    const double vm = vj_plus_1(phi1, t - h, xm, opt.H, q, opt.M, opt.tol).value;
    const double vp = vj_plus_1(phi1, t + h, xp, opt.H, q, opt.M, opt.tol).value;
    const double vdot = (vp - vm) / (2.0 * h);

    const Vector phi_val = phi1(t, xc);
    const double x2n = xc.tail(traj.dim() - n1).norm();
    double ya = -x2n;
    if (x2n > 0.0)
      ya = std::max(ya, -std::exp(-theta_map.theta_at(x2n)) *
                            theta_map.gamma_at(x2n));
    else
      ya = 0.0;
    const double rhs =
        phi_val.norm() + ya + K_Delta * rho(xc.head(n1), phi_val);
    rep.max_violation = std::max(rep.max_violation, vdot - rhs);
    ++rep.samples;
  }
  if (rep.samples == 0)
    throw ContractError("lego_check: no usable samples on the trajectory");
  return rep;
}

LegoReport lego_check(const StateFunction& phi1, const Trajectory& traj,
                      const CertMapOutcome& map_outcome, double K_Delta,
                      const RhoFn& rho, const QuadratureSpec& q,
                      const LegoOptions& opt) {
  if (std::holds_alternative<CertMapFailure>(map_outcome)) {
    LegoReport rep;
    rep.hypothesis_ok = false;  // excitation hypothesis unmet
    rep.max_violation = 0.0;
    rep.samples = 0;
    return rep;
  }
  return lego_check(phi1, traj, std::get<CertificateMap>(map_outcome), K_Delta,
                    rho, q, opt);
}

json NecessityCell::to_json() const {
  json o;
  o["uniformity"] = to_string(uniformity);
  o["udpe_certified"] = udpe_certified;
  o["consistent"] = consistent;
  if (witness) o["witness"] = witness->to_json();
  return o;
}

NecessityCell necessity_experiment(const StateFunction& F, Verdict uniformity,
                                   const AnnulusGrid& grid, double T,
                                   const QuadratureSpec& q, int threads) {
  NecessityCell cell;
  cell.uniformity = uniformity;
  const CertifyOutcome out = udpe_certificate(F, grid, T, q, threads);
  cell.udpe_certified = certified(out);
  if (!cell.udpe_certified) cell.witness = counterexample(out);
  cell.consistent =
      !(uniformity == Verdict::uniform && !cell.udpe_certified);
  return cell;
}

StateFunction as_state_function(const OdeSystem& sys, Interval domain_t) {
  return StateFunction(
      [rhs = sys.rhs](double t, const Vector& x) { return rhs(t, x); },
      sys.dim, sys.dim, domain_t, "field:" + sys.label);
}

FieldEnvelopeResult field_excitation_envelope(
    const StateFunction& F, const AnnulusGrid& grid,
    const std::vector<double>& t0_grid, double horizon,
    const MornarOptions& opt) {
  FieldEnvelopeResult out;
  out.worst_a = kInf;
  Vector unit(1);
  unit << 1.0;
  const int n1 = static_cast<int>(grid.x1_samples.front().size());
  const int n2 = static_cast<int>(grid.x2_samples.front().size());
  for (const auto& x1 : grid.x1_samples) {
    for (const auto& x2 : grid.x2_samples) {
      Vector x(n1 + n2);
      x.head(n1) = x1;
      if (n2 > 0) x.tail(n2) = x2;
      const TimeSignal speed(
          [&F, x](double t) {
            Matrix m(1, 1);
            m(0, 0) = F(t, x).norm();
            return m;
          },
          F.domain_t(), 1, 1, "field_speed");
      const MornarOutcome fit =
          mornar_scalar_pe(speed, {unit}, t0_grid, horizon, opt);
      const double a = fit.certificate ? fit.certificate->mu : 0.0;
      if (a < out.worst_a) {
        out.worst_a = a;
        out.worst_x = x;
      }
      if (!fit.certificate) out.all_linear = false;
    }
  }
  return out;
}

}  // namespace pelab
