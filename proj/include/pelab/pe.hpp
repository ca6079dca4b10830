#pragma once

#include "pelab/ode.hpp"
#include "pelab/signal.hpp"

#include <json.hpp>

#include <limits>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace pelab {

enum class CertificateKind { classical_gram, udpe_annulus, mornar_scalar };

std::string to_string(CertificateKind k);

struct EvidencePoint {
  double t = 0.0;
  std::optional<Vector> x;
  double value = 0.0;
};

/// A (T, mu) excitation certificate together with the grid evidence that
/// produced it. Every evidence value is >= mu; certificates hold for window
/// starts in [valid_t_range.lo, valid_t_range.hi - T].
struct PECertificate {
  CertificateKind kind = CertificateKind::classical_gram;
  double T = 0.0;
  double mu = 0.0;
  Interval valid_t_range{};
  std::vector<EvidencePoint> evidence;
  std::map<std::string, double> params;

  nlohmann::json to_json() const;
};

/// A witness that excitation fell below the floor: the minimizing window
/// start and, for state-dependent checks, the minimizing state.
struct PeCounterexample {
  CertificateKind kind = CertificateKind::classical_gram;
  double t = 0.0;
  std::optional<Vector> x;
  double value = 0.0;
  std::string reason;

  nlohmann::json to_json() const;
};

using CertifyOutcome = std::variant<PECertificate, PeCounterexample>;

inline bool certified(const CertifyOutcome& o) {
  return std::holds_alternative<PECertificate>(o);
}
inline const PECertificate& certificate(const CertifyOutcome& o) {
  return std::get<PECertificate>(o);
}
inline const PeCounterexample& counterexample(const CertifyOutcome& o) {
  return std::get<PeCounterexample>(o);
}

nlohmann::json outcome_json(const CertifyOutcome& o);

/// Deterministic product grid over the annulus delta <= ||x1|| <= Delta,
/// ||x2|| <= Delta (x2 samples include 0), with a list of window starts.
struct AnnulusGrid {
  double delta = 0.0;
  double Delta = 0.0;
  std::vector<Vector> x1_samples;
  std::vector<Vector> x2_samples;
  std::vector<double> t_samples;

  static AnnulusGrid build(int n1, int n2, double delta, double Delta,
                           std::vector<double> t_samples, int n_dir = 16,
                           int n_rad = 3);
};

/// Tabulated monotone certificate functions delta -> (theta(delta),
/// gamma(delta)) for a fixed Delta: gamma nondecreasing, theta nonincreasing.
struct CertificateMap {
  double Delta = 0.0;
  std::vector<double> deltas;
  std::vector<double> theta;
  std::vector<double> gamma;

  /// Piecewise-linear in [deltas.front, deltas.back]; below the smallest
  /// tabulated delta, gamma is scaled linearly through zero and theta is
  /// clamped (which only tightens downstream inequalities); above, clamped.
  double gamma_at(double s) const;
  double theta_at(double s) const;

  nlohmann::json to_json() const;
};

struct CertMapFailure {
  double delta = 0.0;
  PeCounterexample witness;
};

using CertMapOutcome = std::variant<CertificateMap, CertMapFailure>;

/// Windowed-Gram PE check: mu = min over t_grid of the smallest eigenvalue
/// of the Gram integral over [t, t+T].
CertifyOutcome classical_pe_certificate(const TimeSignal& S, double T,
                                        const QuadratureSpec& q,
                                        const std::vector<double>& t_grid);

/// State-dependent excitation check over an annulus grid: mu = min over
/// (x1, x2, t) of the windowed norm integral.
CertifyOutcome udpe_certificate(const StateFunction& f, const AnnulusGrid& grid,
                                double T, const QuadratureSpec& q,
                                int threads = 1);

struct ScanOptions {
  double T0 = 1.0;
  std::vector<double> t_grid;
};

struct ScanResult {
  double T = 0.0;
  double mu = 0.0;
};

/// Scans T over the doubling schedule {T0, 2 T0, ...} up to T_max; returns
/// the first T whose inf over window starts exceeds the floor.
std::optional<ScanResult> pointwise_pe_scan(const StateFunction& f,
                                            const Vector& x, double T_max,
                                            const QuadratureSpec& q,
                                            const ScanOptions& opt);

struct CertMapOptions {
  double T0 = 1.0;
  double T_max = 64.0;
  std::vector<double> t_samples;
  int n_dir = 8;
  int n_rad = 2;
  int threads = 1;
};

/// Builds the monotone certificate map: per delta, the smallest doubling-
/// schedule T certifying the [delta, Delta] annulus and its mu; then the
/// running inf of mu (from delta upward) and running sup of T regularize the
/// tables into monotone functions.
CertMapOutcome certificate_map(const StateFunction& f, double Delta,
                               const std::vector<double>& delta_grid,
                               const QuadratureSpec& q,
                               const CertMapOptions& opt);

/// Converts a scalar-function certificate to one for its p-th power:
/// T_p = T, mu_p = mu^p / T^(p/q) with 1/p + 1/q = 1.
PECertificate power_certificate(const PECertificate& c, double p);

struct FilteredPeOptions {
  double T0 = 1.0;
  double T_max = 0.0;     // <= 0: horizon / 2
  double burn_in = 5.0;   // transient skipped before scanning
  double t_start = 0.0;
  double ode_step = 1e-3;
  double sol_bound = std::numeric_limits<double>::infinity();
  int t_count = 32;
};

struct HypothesisViolation {
  double t = 0.0;
  double norm = 0.0;
  double bound = 0.0;
};

using FilteredOutcome =
    std::variant<PECertificate, PeCounterexample, HypothesisViolation>;

/// Integrates the damped filter Phi_f' = -f_phi(t, Phi_f) Phi_f + f(t, z)
/// from (t_start, phi_f0), wraps the solution as a signal of t, and scans it
/// for excitation past the burn-in. Solutions exceeding sol_bound report a
/// hypothesis violation instead of a certificate. horizon <= 0 selects ten
/// base windows.
FilteredOutcome filtered_pe_check(
    const StateFunction& f,
    const std::function<double(double, const Vector&)>& f_phi, const Vector& z,
    const Vector& phi_f0, double horizon, const QuadratureSpec& q,
    const FilteredPeOptions& opt = {});

struct MornarFit {
  Vector direction;
  double a = 0.0;
  double b = 0.0;
  bool flat = false;
};

struct MornarOptions {
  double T_burn = 20.0;
  QuadratureSpec quad{};
  double a_floor = kMuFloor;
};

struct MornarOutcome {
  std::vector<MornarFit> fits;
  std::optional<PECertificate> certificate;
  std::optional<PeCounterexample> counterexample;
};

/// Fits the best linear lower envelope a (t - t0) + b of the running
/// integral of ||P(s) x|| per direction. Directions whose long-window slope
/// estimates trend to zero are declared flat (a = 0) and returned as the
/// counterexample.
MornarOutcome mornar_scalar_pe(const TimeSignal& P,
                               const std::vector<Vector>& directions,
                               const std::vector<double>& t0_grid,
                               double horizon, const MornarOptions& opt = {});

nlohmann::json certificate_map_json(const CertMapOutcome& o);

}  // namespace pelab
