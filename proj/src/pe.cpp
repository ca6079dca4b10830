#include "pelab/pe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pelab {

using nlohmann::json;

std::string to_string(CertificateKind k) {
  switch (k) {
    case CertificateKind::classical_gram: return "classical_gram";
    case CertificateKind::udpe_annulus: return "udpe_annulus";
    case CertificateKind::mornar_scalar: return "mornar_scalar";
  }
  return "unknown";
}

namespace {

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json evidence_json(const std::vector<EvidencePoint>& ev) {
  json a = json::array();
  for (const auto& e : ev) {
    json o;
    o["t"] = e.t;
    if (e.x) o["x"] = vector_json(*e.x);
    o["value"] = e.value;
    a.push_back(o);
  }
  return a;
}

}  // namespace

json PECertificate::to_json() const {
  json o;
  o["kind"] = to_string(kind);
  o["T"] = T;
  o["mu"] = mu;
  o["valid_t_range"] = {valid_t_range.lo, valid_t_range.hi};
  o["evidence"] = evidence_json(evidence);
  o["params"] = params;
  return o;
}

json PeCounterexample::to_json() const {
  json o;
  o["kind"] = to_string(kind);
  o["t"] = t;
  if (x) o["x"] = vector_json(*x);
  o["value"] = value;
  o["reason"] = reason;
  return o;
}

json outcome_json(const CertifyOutcome& o) {
  json j;
  if (certified(o)) {
    j["certified"] = true;
    j["certificate"] = certificate(o).to_json();
  } else {
    j["certified"] = false;
    j["counterexample"] = counterexample(o).to_json();
  }
  return j;
}

AnnulusGrid AnnulusGrid::build(int n1, int n2, double delta, double Delta,
                               std::vector<double> t_samples, int n_dir,
                               int n_rad) {
  if (!(delta > 0.0) || Delta < delta)
    throw ContractError("AnnulusGrid: need 0 < delta <= Delta");
  if (t_samples.empty()) throw ContractError("AnnulusGrid: empty t_samples");
  AnnulusGrid g;
  g.delta = delta;
  g.Delta = Delta;
  g.t_samples = std::move(t_samples);

  const auto dirs1 = sphere_directions(n1, n_dir);
  std::vector<double> radii1;
  if (Delta - delta < 1e-12 || n_rad <= 1) {
    radii1 = {delta};
  } else {
    for (int i = 0; i < n_rad; ++i)
      radii1.push_back(delta + (Delta - delta) * i / (n_rad - 1));
  }
  for (const auto& d : dirs1)
    for (double r : radii1) g.x1_samples.push_back(r * d);

  if (n2 <= 0) {
    g.x2_samples.push_back(Vector(0));
  } else {
    g.x2_samples.push_back(Vector::Zero(n2));
    const auto dirs2 = sphere_directions(n2, n_dir);
    std::vector<double> radii2;
    for (int i = 1; i <= n_rad; ++i) radii2.push_back(Delta * i / n_rad);
    for (const auto& d : dirs2)
      for (double r : radii2) g.x2_samples.push_back(r * d);
  }

  for (const auto& v : g.x1_samples) {
    const double n = v.norm();
    if (n < delta - 1e-9 || n > Delta + 1e-9)
      throw ContractError("AnnulusGrid: x1 sample norm outside [delta, Delta]");
  }
  for (const auto& v : g.x2_samples)
    if (v.size() > 0 && v.norm() > Delta + 1e-9)
      throw ContractError("AnnulusGrid: x2 sample norm above Delta");
  if (g.x1_samples.empty()) throw ContractError("AnnulusGrid: no x1 samples");
  return g;
}

double CertificateMap::gamma_at(double s) const {
  if (deltas.empty()) throw ContractError("CertificateMap: empty");
  if (s <= 0.0) return 0.0;
  if (s <= deltas.front()) return gamma.front() * (s / deltas.front());
  if (s >= deltas.back()) return gamma.back();
  auto it = std::upper_bound(deltas.begin(), deltas.end(), s);
  const size_t j = it - deltas.begin();
  const double w = (s - deltas[j - 1]) / (deltas[j] - deltas[j - 1]);
  return (1.0 - w) * gamma[j - 1] + w * gamma[j];
}

double CertificateMap::theta_at(double s) const {
  if (deltas.empty()) throw ContractError("CertificateMap: empty");
  if (s <= deltas.front()) return theta.front();
  if (s >= deltas.back()) return theta.back();
  auto it = std::upper_bound(deltas.begin(), deltas.end(), s);
  const size_t j = it - deltas.begin();
  const double w = (s - deltas[j - 1]) / (deltas[j] - deltas[j - 1]);
  return (1.0 - w) * theta[j - 1] + w * theta[j];
}

json CertificateMap::to_json() const {
  json o;
  o["Delta"] = Delta;
  o["deltas"] = deltas;
  o["theta"] = theta;
  o["gamma"] = gamma;
  return o;
}

CertifyOutcome classical_pe_certificate(const TimeSignal& S, double T,
                                        const QuadratureSpec& q,
                                        const std::vector<double>& t_grid) {
  if (t_grid.empty())
    throw ContractError("classical_pe_certificate: empty t_grid");
  std::vector<EvidencePoint> ev;
  ev.reserve(t_grid.size());
  double mu = std::numeric_limits<double>::infinity();
  double t_min = t_grid.front();
  for (double t : t_grid) {
    const double lam = min_eigenvalue(window_gram(S, t, T, q));
    ev.push_back({t, std::nullopt, lam});
    if (lam < mu) {
      mu = lam;
      t_min = t;
    }
  }
  const Interval range{*std::min_element(t_grid.begin(), t_grid.end()),
                       *std::max_element(t_grid.begin(), t_grid.end()) + T};
  if (mu > kMuFloor) {
    PECertificate c;
    c.kind = CertificateKind::classical_gram;
    c.T = T;
    c.mu = mu;
    c.valid_t_range = range;
    c.evidence = std::move(ev);
    return c;
  }
  PeCounterexample cx;
  cx.kind = CertificateKind::classical_gram;
  cx.t = t_min;
  cx.value = mu;
  cx.reason = "windowed Gram minimum eigenvalue at or below mu_floor";
  return cx;
}

CertifyOutcome udpe_certificate(const StateFunction& f, const AnnulusGrid& grid,
                                double T, const QuadratureSpec& q,
                                int threads) {
  const int n1 = static_cast<int>(grid.x1_samples.front().size());
  const int n2 = static_cast<int>(grid.x2_samples.front().size());
  if (n1 != f.n1() || n1 + n2 != f.state_dim())
    throw ContractError("udpe_certificate: grid partition does not match '" +
                        f.label() + "'");

  struct Best {
    double value = std::numeric_limits<double>::infinity();
    double t = 0.0;
  };
  const int n_states =
      static_cast<int>(grid.x1_samples.size() * grid.x2_samples.size());
  std::vector<Best> best(n_states);
  std::vector<Vector> states(n_states);
  for (size_t i = 0; i < grid.x1_samples.size(); ++i)
    for (size_t j = 0; j < grid.x2_samples.size(); ++j) {
      const int k = static_cast<int>(i * grid.x2_samples.size() + j);
      Vector x(n1 + n2);
      x.head(n1) = grid.x1_samples[i];
      if (n2 > 0) x.tail(n2) = grid.x2_samples[j];
      states[k] = std::move(x);
    }

  parallel_for(n_states, threads, [&](int k) {
    Best b;
    for (double t : grid.t_samples) {
      const double v = window_integral_norm(f, states[k], t, T, q);
      if (v < b.value) {
        b.value = v;
        b.t = t;
      }
    }
    best[k] = b;
  });

  std::vector<EvidencePoint> ev;
  ev.reserve(n_states);
  double mu = std::numeric_limits<double>::infinity();
  int k_min = 0;
  for (int k = 0; k < n_states; ++k) {
    ev.push_back({best[k].t, states[k], best[k].value});
    if (best[k].value < mu) {
      mu = best[k].value;
      k_min = k;
    }
  }
  if (mu > kMuFloor) {
    PECertificate c;
    c.kind = CertificateKind::udpe_annulus;
    c.T = T;
    c.mu = mu;
    c.valid_t_range = {
        *std::min_element(grid.t_samples.begin(), grid.t_samples.end()),
        *std::max_element(grid.t_samples.begin(), grid.t_samples.end()) + T};
    c.evidence = std::move(ev);
    c.params["delta"] = grid.delta;
    c.params["Delta"] = grid.Delta;
    return c;
  }
  PeCounterexample cx;
  cx.kind = CertificateKind::udpe_annulus;
  cx.t = best[k_min].t;
  cx.x = states[k_min];
  cx.value = mu;
  cx.reason = "windowed norm integral at or below mu_floor on annulus grid";
  return cx;
}

std::optional<ScanResult> pointwise_pe_scan(const StateFunction& f,
                                            const Vector& x, double T_max,
                                            const QuadratureSpec& q,
                                            const ScanOptions& opt) {
  if (x.head(f.n1()).norm() == 0.0)
    throw ContractError("pointwise_pe_scan: designated part of x is zero");
  if (opt.t_grid.empty())
    throw ContractError("pointwise_pe_scan: empty t_grid");
  for (double T = opt.T0; T <= T_max * (1.0 + 1e-12); T *= 2.0) {
    double inf = std::numeric_limits<double>::infinity();
    bool any = false;
    for (double t : opt.t_grid) {
      if (!f.domain_t().contains_window(t, T)) continue;
      any = true;
      inf = std::min(inf, window_integral_norm(f, x, t, T, q));
    }
    if (!any) break;  // window outgrew the domain
    if (inf > kMuFloor) return ScanResult{T, inf};
  }
  return std::nullopt;
}

CertMapOutcome certificate_map(const StateFunction& f, double Delta,
                               const std::vector<double>& delta_grid,
                               const QuadratureSpec& q,
                               const CertMapOptions& opt) {
  if (delta_grid.empty()) throw ContractError("certificate_map: empty grid");
  for (size_t i = 0; i < delta_grid.size(); ++i) {
    if (delta_grid[i] <= 0.0 || delta_grid[i] > Delta * (1.0 + 1e-12))
      throw ContractError("certificate_map: deltas must lie in (0, Delta]");
    if (i > 0 && delta_grid[i] <= delta_grid[i - 1])
      throw ContractError("certificate_map: deltas must increase");
  }
  if (opt.t_samples.empty())
    throw ContractError("certificate_map: empty t_samples");

  std::vector<double> T_of(delta_grid.size(), 0.0);
  std::vector<double> mu_of(delta_grid.size(), 0.0);
  for (size_t i = 0; i < delta_grid.size(); ++i) {
    const double delta = delta_grid[i];
    const AnnulusGrid grid =
        AnnulusGrid::build(f.n1(), f.n2(), delta, Delta, opt.t_samples,
                           opt.n_dir, opt.n_rad);
    bool found = false;
    CertifyOutcome last = PeCounterexample{};
    for (double T = opt.T0; T <= opt.T_max * (1.0 + 1e-12); T *= 2.0) {
      bool fits = true;
      for (double t : grid.t_samples)
        if (!f.domain_t().contains_window(t, T)) fits = false;
      if (!fits) break;
      last = udpe_certificate(f, grid, T, q, opt.threads);
      if (certified(last)) {
        T_of[i] = T;
        mu_of[i] = certificate(last).mu;
        found = true;
        break;
      }
    }
    if (!found) {
      CertMapFailure fail;
      fail.delta = delta;
      if (!certified(last)) {
        fail.witness = counterexample(last);
      } else {
        fail.witness.reason = "no admissible window length";
      }
      fail.witness.reason =
          "not udpe at delta=" + std::to_string(delta) + ": " +
          fail.witness.reason;
      return fail;
    }
  }

  CertificateMap map;
  map.Delta = Delta;
  map.deltas = delta_grid;
  map.theta.resize(delta_grid.size());
  map.gamma.resize(delta_grid.size());
  // Running inf of mu and sup of T over [delta, Delta] force monotonicity.
  double run_mu = std::numeric_limits<double>::infinity();
  double run_T = 0.0;
  for (int i = static_cast<int>(delta_grid.size()) - 1; i >= 0; --i) {
    run_mu = std::min(run_mu, mu_of[i]);
    run_T = std::max(run_T, T_of[i]);
    map.gamma[i] = run_mu;
    map.theta[i] = run_T;
  }
  for (size_t i = 0; i < map.gamma.size(); ++i)
    if (!(map.gamma[i] > 0.0) || !std::isfinite(map.gamma[i]) ||
        !(map.theta[i] > 0.0) || !std::isfinite(map.theta[i]))
      throw EvaluationError("certificate_map: non-positive table entry");
  return map;
}

PECertificate power_certificate(const PECertificate& c, double p) {
  if (!(p > 1.0)) throw ContractError("power_certificate: p must exceed 1");
  if (c.kind == CertificateKind::mornar_scalar)
    throw ContractError("power_certificate: not defined for mornar_scalar");
  const double qexp = p / (p - 1.0);
  const double scale = std::pow(c.T, p / qexp);
  PECertificate out;
  out.kind = c.kind;
  out.T = c.T;
  out.mu = std::pow(c.mu, p) / scale;
  out.valid_t_range = c.valid_t_range;
  out.evidence.reserve(c.evidence.size());
  for (const auto& e : c.evidence)
    out.evidence.push_back({e.t, e.x, std::pow(e.value, p) / scale});
  out.params = c.params;
  out.params["p"] = p;
  out.params["q"] = qexp;
  return out;
}

FilteredOutcome filtered_pe_check(
    const StateFunction& f,
    const std::function<double(double, const Vector&)>& f_phi, const Vector& z,
    const Vector& phi_f0, double horizon, const QuadratureSpec& q,
    const FilteredPeOptions& opt) {
  if (horizon <= 0.0) horizon = 10.0 * std::max(opt.T0, 1.0);
  const int m = static_cast<int>(phi_f0.size());
  OdeSystem filter;
  filter.dim = m;
  filter.label = "pe_filter";
  filter.rhs = [&f, &f_phi, &z](double t, const Vector& phi) {
    return Vector(-f_phi(t, phi) * phi + f(t, z));
  };
  const Trajectory traj =
      integrate(filter, opt.t_start, phi_f0, opt.t_start + horizon,
                opt.ode_step);
  for (size_t i = 0; i < traj.states.size(); ++i) {
    const double n = traj.states[i].norm();
    if (n > opt.sol_bound)
      return HypothesisViolation{traj.times[i], n, opt.sol_bound};
  }
  if (traj.flags.escaped)
    return HypothesisViolation{traj.t_end(), traj.back().norm(),
                               opt.sol_bound};

  const Interval dom{opt.t_start + opt.burn_in, traj.t_end()};
  StateFunction wrapped = signals::of_time(
      [traj](double t) { return sample(traj, t); }, dom, "filtered:" + f.label());

  const double T_max = opt.T_max > 0.0 ? opt.T_max : 0.5 * horizon;
  ScanOptions scan;
  scan.T0 = opt.T0;
  for (int i = 0; i < opt.t_count; ++i)
    scan.t_grid.push_back(dom.lo + (dom.hi - dom.lo) * i / opt.t_count);
  Vector dummy(1);
  dummy << 1.0;
  const auto res = pointwise_pe_scan(wrapped, dummy, T_max, q, scan);
  if (res) {
    PECertificate c;
    c.kind = CertificateKind::udpe_annulus;
    c.T = res->T;
    c.mu = res->mu;
    c.valid_t_range = dom;
    c.evidence.push_back({dom.lo, z, res->mu});
    c.params["burn_in"] = opt.burn_in;
    c.params["horizon"] = horizon;
    return c;
  }
  // Witness: the flattest admissible window for the smallest schedule T.
  double worst = std::numeric_limits<double>::infinity();
  double t_worst = dom.lo;
  for (double t : scan.t_grid) {
    if (!dom.contains_window(t, opt.T0)) continue;
    const double v = window_integral_norm(wrapped, dummy, t, opt.T0, q);
    if (v < worst) {
      worst = v;
      t_worst = t;
    }
  }
  PeCounterexample cx;
  cx.kind = CertificateKind::udpe_annulus;
  cx.t = t_worst;
  cx.x = z;
  cx.value = worst;
  cx.reason = "filtered signal stays below mu_floor on scanned windows";
  return cx;
}

MornarOutcome mornar_scalar_pe(const TimeSignal& P,
                               const std::vector<Vector>& directions,
                               const std::vector<double>& t0_grid,
                               double horizon, const MornarOptions& opt) {
  if (directions.empty())
    throw ContractError("mornar_scalar_pe: empty directions");
  for (const auto& d : directions)
    if (std::abs(d.norm() - 1.0) > 1e-9)
      throw ContractError("mornar_scalar_pe: directions must be unit norm");
  if (t0_grid.empty()) throw ContractError("mornar_scalar_pe: empty t0_grid");

  std::vector<double> t0_sorted = t0_grid;
  std::sort(t0_sorted.begin(), t0_sorted.end());
  const double t_lo = t0_sorted.front();
  const double t_hi = t_lo + horizon;
  if (!P.domain().contains(t_lo) || !P.domain().contains(t_hi))
    throw DomainError("mornar_scalar_pe: horizon outside signal domain");

  const double h = opt.quad.step > 0.0 ? opt.quad.step : 1e-3;
  const int n = std::max(2, static_cast<int>(std::ceil((t_hi - t_lo) / h)));
  const double hq = (t_hi - t_lo) / n;

  MornarOutcome out;
  double min_a = std::numeric_limits<double>::infinity();
  double min_b = 0.0;
  int flattest = -1;

  for (const auto& dir : directions) {
    // Cumulative integral of ||P(s) x|| on the fine grid.
    std::vector<double> g(n + 1, 0.0);
    double prev = (P(t_lo) * dir).norm();
    for (int i = 1; i <= n; ++i) {
      const double cur = (P(t_lo + i * hq) * dir).norm();
      g[i] = g[i - 1] + 0.5 * hq * (prev + cur);
      prev = cur;
    }
    auto node = [&](double t) {
      int i = static_cast<int>(std::lround((t - t_lo) / hq));
      return std::clamp(i, 0, n);
    };

    MornarFit fit;
    fit.direction = dir;
    double a_raw = std::numeric_limits<double>::infinity();
    std::vector<double> t0s, long_slopes;
    for (double t0 : t0_sorted) {
      const int i0 = node(t0);
      const int j_min = node(t0 + opt.T_burn);
      for (int j = std::max(j_min, i0 + 1); j <= n; ++j) {
        const double dt = (j - i0) * hq;
        if (dt < opt.T_burn - 1e-9) continue;
        a_raw = std::min(a_raw, (g[j] - g[i0]) / dt);
      }
      const double span = (n - i0) * hq;
      if (span >= opt.T_burn) {
        t0s.push_back(t0);
        long_slopes.push_back((g[n] - g[i0]) / span);
      }
    }
    if (!std::isfinite(a_raw)) a_raw = 0.0;

    bool flat = a_raw <= opt.a_floor;
    if (!flat && long_slopes.size() >= 3) {
      const double trend = spearman(t0s, long_slopes);
      if (trend <= -0.9 &&
          long_slopes.back() <= 0.5 * long_slopes.front())
        flat = true;  // slope estimates decay with t0: no linear lower envelope
    }
    if (flat) {
      fit.flat = true;
      fit.a = 0.0;
      fit.b = 0.0;
    } else {
      fit.a = a_raw;
      double b = 0.0;
      for (double t0 : t0_sorted) {
        const int i0 = node(t0);
        for (int j = i0; j <= n; ++j)
          b = std::min(b, g[j] - g[i0] - fit.a * (j - i0) * hq);
      }
      fit.b = b;
    }
    if (fit.flat) {
      if (flattest < 0) flattest = static_cast<int>(out.fits.size());
    } else {
      min_a = std::min(min_a, fit.a);
      min_b = std::min(min_b, fit.b);
    }
    out.fits.push_back(std::move(fit));
  }

  if (flattest >= 0) {
    PeCounterexample cx;
    cx.kind = CertificateKind::mornar_scalar;
    cx.t = t_lo;
    cx.x = out.fits[flattest].direction;
    cx.value = 0.0;
    cx.reason = "running integral is sublinear along this direction";
    out.counterexample = cx;
    return out;
  }

  PECertificate c;
  c.kind = CertificateKind::mornar_scalar;
  c.T = opt.T_burn;
  c.mu = min_a;
  c.valid_t_range = {t_lo, t_hi};
  for (const auto& fit : out.fits)
    c.evidence.push_back({t_lo, fit.direction, fit.a});
  c.params["b"] = min_b;
  c.params["T_burn"] = opt.T_burn;
  out.certificate = c;
  return out;
}

json certificate_map_json(const CertMapOutcome& o) {
  json j;
  if (std::holds_alternative<CertificateMap>(o)) {
    j["certified"] = true;
    j["map"] = std::get<CertificateMap>(o).to_json();
  } else {
    const auto& f = std::get<CertMapFailure>(o);
    j["certified"] = false;
    j["delta"] = f.delta;
    j["counterexample"] = f.witness.to_json();
  }
  return j;
}

}  // namespace pelab
