#pragma once

#include "pelab/ode.hpp"
#include "pelab/pe.hpp"
#include "pelab/signal.hpp"

#include <functional>
#include <string>
#include <vector>

namespace pelab {

/// Closed-loop system split as F = [A + B; C + D] over a state partition
/// (x1, x2), with a Lyapunov evaluator and the x1-channel residual B0.
/// All pieces vanish at x = 0.
struct MatchingSystem {
  int n1 = 0;
  int n2 = 0;
  OdeSystem sys;
  StateFunction A, B, C, D;  // each maps (t, x) to its block's contribution
  std::function<double(double, const Vector&)> V;
  std::function<double(double, const Vector&)> V_dot;  // along sys.rhs
  StateFunction B0;  // (t, x2) -> x1-block value at x1 = 0
};

/// Gradient-adaptive loop: x1' = Atilde x1 + G(t) x2, x2' = -P^{-1} G(t)^T x1
/// with V = 0.5 ||x1||^2 + 0.5 x2' P x2. G is the n1 x n2 signal Phi.
MatchingSystem make_gradient_adaptive(const TimeSignal& Phi,
                                      const Matrix& Atilde, const Matrix& P);

/// Scalar convenience overload.
MatchingSystem make_gradient_adaptive(const TimeSignal& Phi,
                                      double atilde = -1.0, double p = 1.0);

struct LyapunovFn {
  std::function<double(double, const Vector&)> value;
  std::function<Vector(double, const Vector&)> grad;
};

/// Composite (xi, z) loop for bounded dynamic feedback: u = Tanh(z),
/// xi' = f(t, xi) + g(t, xi, u) u, z' = -z - g(t, xi, u)^T dV/dxi.
/// W(t, xi, z) = V(t, xi) + sum ln cosh z_i decreases along solutions and
/// |u_i| < 1 structurally.
struct FeedforwardSystem {
  int n_xi = 0;
  int n_u = 0;
  OdeSystem sys;  // state (xi, z)
  std::function<double(double, const Vector&)> W;
  std::function<double(double, const Vector&)> W_dot;
};

using InputMap =
    std::function<Matrix(double, const Vector&, const Vector&)>;  // (t, xi, u)

FeedforwardSystem make_feedforward_bounded(
    const std::function<Vector(double, const Vector&)>& f, int n_xi,
    const InputMap& g, int n_u, const LyapunovFn& V,
    const std::string& label = "feedforward");

/// Drift-free case with the default V = 0.5 ||xi||^2.
FeedforwardSystem make_driftless(const InputMap& g, int n_xi, int n_u,
                                 const std::string& label = "driftless");

/// Lagrangian plant D(q) qdd + C(q, qd) qd + g(q) = u, linear in the lumped
/// parameter vector theta via the regressor.
struct ELPlant {
  int dof = 0;
  int n_params = 0;
  std::function<Matrix(const Vector&)> inertia;
  std::function<Matrix(const Vector&, const Vector&)> coriolis;
  std::function<Matrix(const Vector&, const Vector&)> inertia_dot;
  std::function<Vector(const Vector&)> gravity;
  /// Psi~(q, qd, w, a) with Psi~^T theta = D(q) a + C(q, qd) w + g(q);
  /// the plain regressor is Psi(q, qd, qdd) = regressor4(q, qd, qd, qdd).
  std::function<Matrix(const Vector&, const Vector&, const Vector&,
                       const Vector&)>
      regressor4;
  Vector theta_true;
  bool velocity_damping = false;  // skew-symmetry check skipped when set
  std::string label;

  Matrix regressor(const Vector& q, const Vector& qd, const Vector& qdd) const {
    return regressor4(q, qd, qd, qdd);
  }
};

/// 1-DOF pendulum: D = theta1, g = theta2 sin q, optional viscous theta3 qd
/// folded into the damping matrix. Defaults theta = (1, 9.81[, 0.1]).
ELPlant make_pendulum_el(bool with_viscous = false);

/// Planar 2-DOF arm with three lumped parameters and no gravity.
ELPlant make_two_link_el();

struct ControllerConfig {
  Matrix K_d;      // SPD
  double lambda = 1.0;
  double gamma = 1.0;
};

struct ReferenceTrajectory {
  std::function<Vector(double)> q;
  std::function<Vector(double)> qd;
  std::function<Vector(double)> qdd;
  Interval domain{-1e6, 1e6};
  std::string label;
};

ReferenceTrajectory sine_reference(int dof, double omega = 1.0,
                                   double amp = 1.0);
ReferenceTrajectory zero_reference(int dof);

/// Tracking loop in coordinates y = (q~, s, theta~) with q~ = q - q_d,
/// s = q~' + lambda q~ and theta~ = theta - theta_hat:
///   D(q) s' + C(q, qd) s + K_d s = -Psi~^T theta~,   theta~' = gamma Psi~ s.
/// Phi is the desired-trajectory regressor Psi~(q_d, qd_d, qd_d, qdd_d).
struct SlotineLiSystem {
  int dof = 0;
  int n_params = 0;
  OdeSystem sys;  // state (q~, s, theta~)
  TimeSignal Phi;
  std::function<double(double, const Vector&)> V;
  ControllerConfig cfg;
};

SlotineLiSystem make_slotine_li(const ELPlant& plant,
                                const ReferenceTrajectory& ref,
                                const ControllerConfig& cfg);

/// Benchmark systems used across the experiments.
OdeSystem make_scalar_linear(double k = 1.0);   // x' = -k x
OdeSystem make_scalar_decay();                  // x' = -x / (1 + t)
OdeSystem make_planar_rotation();               // x1' = -x2, x2' = x1

/// Least nondecreasing envelope of (s_i, v_i) pairs: sorts by s and takes the
/// running max of v. Returns (sorted s, envelope).
std::pair<std::vector<double>, std::vector<double>> fit_monotone_envelope(
    std::vector<std::pair<double, double>> pts);

/// Margin of the excitation-vs-feedthrough gate: min over the grid of
/// exp(-theta(s)) gamma(s) - 3 rho1_Delta rho4(s). Positive means the gate
/// holds with room to spare; reported, not enforced.
double enoughpe_margin(const CertificateMap& map, double rho1_Delta,
                       const std::function<double(double)>& rho4,
                       const std::vector<double>& s_grid);

}  // namespace pelab
