#pragma once

#include "pelab/ode.hpp"
#include "pelab/pe.hpp"

#include <json.hpp>

#include <functional>
#include <optional>
#include <variant>
#include <vector>

namespace pelab {

enum class Verdict { uniform, non_uniform, inconclusive };

std::string to_string(Verdict v);

/// Smallest grid time T such that ||x(t)|| <= sigma for every sample with
/// t >= t0 + T (suffix condition, not first crossing). +inf when the suffix
/// condition never holds or the trajectory escaped.
double settling_time(const Trajectory& traj, double sigma);

/// Settling-time summary over a (t0, direction) product sweep with the
/// start-time-independence verdict.
struct UniformityReport {
  double r = 0.0;
  double sigma = 0.0;
  std::vector<double> t0_grid;
  std::vector<std::vector<double>> settling_by_dir;  // [t0][direction]
  std::vector<double> settling;                      // per t0: max over dirs
  double dispersion = 0.0;                           // (max-min)/median
  double trend = 0.0;                                // Spearman vs t0
  Verdict verdict = Verdict::inconclusive;

  /// True when the finite settling values grow with t0 and every unsettled
  /// start time comes after every settled one: the growth signature that
  /// accompanies an inconclusive verdict on a too-short horizon.
  bool growing_settling() const;

  nlohmann::json to_json() const;
  void write_settling_csv(std::ostream& os) const;
};

struct ProbeOptions {
  double dispersion_threshold = 0.5;
  double trend_threshold = 0.9;
  int threads = 1;
  double escape_radius = 1e6;
};

UniformityReport uniformity_probe(const OdeSystem& sys, double r, double sigma,
                                  const std::vector<double>& t0_grid,
                                  int x0_directions, double horizon,
                                  double step, const ProbeOptions& opt = {});

/// Observed-sup envelope over radii; the least nondecreasing gamma_hat with
/// gamma_hat(r) >= sup over (t0, direction, t) of ||x(t)|| from ||x0|| = r.
struct UgsEnvelope {
  std::vector<double> radii;
  std::vector<double> gamma_hat;
  bool violated = false;
  double witness_radius = 0.0;
  double witness_t0 = 0.0;

  nlohmann::json to_json() const;
};

UgsEnvelope ugs_probe(const OdeSystem& sys, const std::vector<double>& radii,
                      const std::vector<double>& t0_grid, int directions,
                      double horizon, double step,
                      const ProbeOptions& opt = {});

/// Exponential envelope ||x(t)|| <= gamma1 ||x0|| exp(-gamma2 (t - t0)).
struct ExpFit {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double residual = 0.0;  // max log-envelope violation absorbed into gamma1
  double r = 0.0;
};

struct UlesFailure {
  std::string reason;
  double slope_first = 0.0;
  double slope_second = 0.0;
};

using UlesOutcome = std::variant<ExpFit, UlesFailure>;

struct UlesOptions {
  double noise_floor = 1e-12;
  double tail_fraction = 0.5;   // fraction of the valid span used as tail
  double ratio_floor = 0.8;     // second-half slope must keep this fraction
  double slope_floor = 1e-4;
};

/// Least-squares log-tail fit per trajectory; gamma2 is the smallest slope
/// magnitude across the ensemble and gamma1 the smallest multiplier making
/// the envelope valid for all samples. Tails whose slope decays (algebraic
/// rather than exponential) are reported as failures.
UlesOutcome ules_fit(const OdeSystem& sys, double r,
                     const std::vector<double>& t0_grid, int directions,
                     double horizon, double step, const UlesOptions& opt = {});

struct VjResult {
  double value = 0.0;             // <= 0
  double truncation_bound = 0.0;  // M exp(-H_used)
  double horizon_used = 0.0;
};

/// Exponentially discounted excitation integral
/// -int_t^{t+H} e^(t-tau) ||phi1(tau, x)|| dtau with x frozen. The horizon
/// widens automatically (up to 60) until M exp(-H) <= tol.
VjResult vj_plus_1(const StateFunction& phi1, double t, const Vector& x,
                   double H, const QuadratureSpec& q, double M,
                   double tol = 1e-10);

struct LegoOptions {
  int n1 = 0;             // system partition: first n1 components are x1
  double fd_step = 1e-2;  // must exceed the trajectory grid step
  int stride = 100;       // evaluate every stride-th node
  double H = 40.0;
  double M = 10.0;
  double tol = 1e-10;
};

struct LegoReport {
  bool hypothesis_ok = true;
  double max_violation = 0.0;
  int samples = 0;
};

using RhoFn = std::function<double(const Vector&, const Vector&)>;

/// Checks the discounted-integral derivative inequality along a trajectory:
/// centered finite differences of vj_plus_1 against
/// ||phi1|| + max(-||x2||, -exp(-theta(||x2||)) gamma(||x2||)) + K rho(x1, phi1).
/// Returns the max violation over sampled nodes.
LegoReport lego_check(const StateFunction& phi1, const Trajectory& traj,
                      const CertificateMap& theta_map, double K_Delta,
                      const RhoFn& rho, const QuadratureSpec& q,
                      const LegoOptions& opt);

/// Convenience: a failed certificate map means the excitation hypothesis is
/// unmet; no derivative check is attempted.
LegoReport lego_check(const StateFunction& phi1, const Trajectory& traj,
                      const CertMapOutcome& map_outcome, double K_Delta,
                      const RhoFn& rho, const QuadratureSpec& q,
                      const LegoOptions& opt);

/// One row of the uniform-attractivity vs excitation contingency table.
/// The flagged cell is (uniform, not excited): it contradicts necessity and
/// demands finer grids.
struct NecessityCell {
  Verdict uniformity = Verdict::inconclusive;
  bool udpe_certified = false;
  bool consistent = true;
  std::optional<PeCounterexample> witness;

  nlohmann::json to_json() const;
};

NecessityCell necessity_experiment(const StateFunction& F, Verdict uniformity,
                                   const AnnulusGrid& grid, double T,
                                   const QuadratureSpec& q, int threads = 1);

/// Wraps a system's rhs as a state function partitioned over the full state,
/// for excitation checks of the vector field itself.
StateFunction as_state_function(const OdeSystem& sys, Interval domain_t);

struct FieldEnvelopeResult {
  bool all_linear = true;         // every sampled state has a > 0
  double worst_a = 0.0;           // smallest slope across sampled states
  std::optional<Vector> worst_x;  // state behind worst_a (or the flat one)
};

/// Linear lower-envelope check of the running integral of ||F(s, x)|| per
/// frozen annulus sample: int_{t0}^{t} ||F(s, x)|| ds >= a (t - t0) + b with
/// a > 0 for every sampled x. Fading fields report the flat witness.
FieldEnvelopeResult field_excitation_envelope(
    const StateFunction& F, const AnnulusGrid& grid,
    const std::vector<double>& t0_grid, double horizon,
    const MornarOptions& opt = {});

}  // namespace pelab
