#include "pelab/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pelab {

namespace {

constexpr Interval kWideDomain{-1e6, 1e6};

void check_zero_at_origin(const StateFunction& f, const char* name) {
  const Vector zero = Vector::Zero(f.state_dim());
  for (double t : {0.0, 0.7, 13.1, 400.0}) {
    if (f(t, zero).norm() > 1e-12)
      throw ContractError(std::string("MatchingSystem: ") + name +
                          " does not vanish at x = 0");
  }
}

void check_matching_invariants(const MatchingSystem& m) {
  check_zero_at_origin(m.A, "A");
  check_zero_at_origin(m.B, "B");
  check_zero_at_origin(m.C, "C");
  check_zero_at_origin(m.D, "D");
  // B0 agrees with B at x1 = 0 and vanishes at x2 = 0, on a small grid.
  std::mt19937 rng(12345);
  std::normal_distribution<double> gauss(0.0, 1.0);
  for (int k = 0; k < 16; ++k) {
    const double t = 3.0 * k;
    Vector x2(m.n2);
    for (int i = 0; i < m.n2; ++i) x2[i] = gauss(rng);
    Vector x(m.n1 + m.n2);
    x.head(m.n1).setZero();
    x.tail(m.n2) = x2;
    if ((m.B0(t, x2) - m.B(t, x)).norm() > 1e-10)
      throw ContractError("MatchingSystem: B0 disagrees with B at x1 = 0");
  }
  const Vector z2 = Vector::Zero(m.n2);
  for (double t : {0.0, 5.0, 101.0})
    if (m.B0(t, z2).norm() > 1e-12)
      throw ContractError("MatchingSystem: B0 does not vanish at x2 = 0");
}

}  // namespace

MatchingSystem make_gradient_adaptive(const TimeSignal& Phi,
                                      const Matrix& Atilde, const Matrix& P) {
  const int n1 = Phi.rows();
  const int n2 = Phi.cols();
  if (Atilde.rows() != n1 || Atilde.cols() != n1)
    throw ContractError("make_gradient_adaptive: Atilde shape mismatch");
  if (P.rows() != n2 || P.cols() != n2)
    throw ContractError("make_gradient_adaptive: P shape mismatch");
  const Matrix Asym = 0.5 * (Atilde + Atilde.transpose());
  if (min_eigenvalue(Asym) >= 0.0)
    throw ContractError(
        "make_gradient_adaptive: Atilde symmetric part must be negative");
  if (min_eigenvalue(0.5 * (P + P.transpose())) <= 0.0)
    throw ContractError("make_gradient_adaptive: P must be SPD");
  const Matrix Pinv = P.inverse();

  MatchingSystem m;
  m.n1 = n1;
  m.n2 = n2;
  m.sys.dim = n1 + n2;
  m.sys.label = "gradient_adaptive:" + Phi.label();
  m.sys.rhs = [Phi, Atilde, Pinv, n1, n2](double t, const Vector& x) {
    const Matrix G = Phi(t);
    Vector dx(n1 + n2);
    dx.head(n1) = Atilde * x.head(n1) + G * x.tail(n2);
    dx.tail(n2) = -Pinv * G.transpose() * x.head(n1);
    return dx;
  };
  m.A = StateFunction(
      [Atilde, n1](double, const Vector& x) { return Vector(Atilde * x.head(n1)); },
      n1, n1 + n2, kWideDomain, "A");
  m.B = StateFunction(
      [Phi, n1, n2](double t, const Vector& x) {
        return Vector(Phi(t) * x.tail(n2));
      },
      n1, n1 + n2, kWideDomain, "B");
  m.C = StateFunction(
      [Phi, Pinv, n1](double t, const Vector& x) {
        return Vector(-Pinv * Phi(t).transpose() * x.head(n1));
      },
      n1, n1 + n2, kWideDomain, "C");
  m.D = StateFunction(
      [n2](double, const Vector&) { return Vector(Vector::Zero(n2)); }, n1,
      n1 + n2, kWideDomain, "D");
  m.V = [P, n1, n2](double, const Vector& x) {
    return 0.5 * x.head(n1).squaredNorm() +
           0.5 * x.tail(n2).dot(P * x.tail(n2));
  };
  m.V_dot = [Atilde, n1](double, const Vector& x) {
    // Matched cross terms cancel; only the x1 block survives.
    return x.head(n1).dot(Atilde * x.head(n1));
  };
  m.B0 = StateFunction(
      [Phi](double t, const Vector& x2) { return Vector(Phi(t) * x2); },
      std::max(1, n2), std::max(1, n2), kWideDomain, "B0");
  check_matching_invariants(m);
  return m;
}

MatchingSystem make_gradient_adaptive(const TimeSignal& Phi, double atilde,
                                      double p) {
  Matrix A(1, 1), P(1, 1);
  A << atilde;
  P << p;
  if (Phi.rows() != 1)
    throw ContractError("make_gradient_adaptive: scalar overload needs 1-row Phi");
  return make_gradient_adaptive(Phi, A, P);
}

FeedforwardSystem make_feedforward_bounded(
    const std::function<Vector(double, const Vector&)>& f, int n_xi,
    const InputMap& g, int n_u, const LyapunovFn& V, const std::string& label) {
  FeedforwardSystem s;
  s.n_xi = n_xi;
  s.n_u = n_u;
  s.sys.dim = n_xi + n_u;
  s.sys.label = label;
  auto tanh_vec = [](const Vector& z) {
    Vector u(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) u[i] = std::tanh(z[i]);
    return u;
  };
  s.sys.rhs = [f, g, V, n_xi, n_u, tanh_vec](double t, const Vector& y) {
    const Vector xi = y.head(n_xi);
    const Vector z = y.tail(n_u);
    const Vector u = tanh_vec(z);
    const Matrix gm = g(t, xi, u);
    if (gm.rows() != n_xi || gm.cols() != n_u)
      throw EvaluationError("feedforward: input map shape mismatch");
    Vector dy(n_xi + n_u);
    dy.head(n_xi) = f(t, xi) + gm * u;
    dy.tail(n_u) = -z - gm.transpose() * V.grad(t, xi);
    return dy;
  };
  s.W = [V, n_xi, n_u](double t, const Vector& y) {
    double acc = V.value(t, y.head(n_xi));
    for (int i = 0; i < n_u; ++i) acc += std::log(std::cosh(y[n_xi + i]));
    return acc;
  };
  s.W_dot = [f, g, V, n_xi, n_u, tanh_vec](double t, const Vector& y) {
    const Vector xi = y.head(n_xi);
    const Vector z = y.tail(n_u);
    const Vector u = tanh_vec(z);
    const Matrix gm = g(t, xi, u);
    const Vector grad = V.grad(t, xi);
    const Vector zdot = -z - gm.transpose() * grad;
    // dV/dxi . (f + g u) + Tanh(z) . zdot; the g-channel terms cancel.
    return grad.dot(f(t, xi) + gm * u) + u.dot(zdot);
  };
  return s;
}

FeedforwardSystem make_driftless(const InputMap& g, int n_xi, int n_u,
                                 const std::string& label) {
  LyapunovFn V;
  V.value = [](double, const Vector& xi) { return 0.5 * xi.squaredNorm(); };
  V.grad = [](double, const Vector& xi) { return xi; };
  auto zero_drift = [n_xi](double, const Vector&) {
    return Vector(Vector::Zero(n_xi));
  };
  return make_feedforward_bounded(zero_drift, n_xi, g, n_u, V, label);
}

namespace {

void check_el_invariants(const ELPlant& p) {
  std::mt19937 rng(777);
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto rand_vec = [&](int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = gauss(rng);
    return v;
  };
  for (int k = 0; k < 100; ++k) {
    const Vector q = rand_vec(p.dof);
    const Vector qd = rand_vec(p.dof);
    const Vector qdd = rand_vec(p.dof);
    const Vector lhs = p.inertia(q) * qdd + p.coriolis(q, qd) * qd +
                       p.gravity(q);
    const Vector rhs = p.regressor(q, qd, qdd).transpose() * p.theta_true;
    if ((lhs - rhs).norm() > 1e-10)
      throw ContractError(p.label + ": regressor does not reproduce dynamics");
    const double dmin = min_eigenvalue(p.inertia(q));
    if (dmin <= 0.0)
      throw ContractError(p.label + ": inertia not positive definite");
    if (!p.velocity_damping) {
      const Vector v = rand_vec(p.dof);
      const Matrix skew = p.inertia_dot(q, qd) - 2.0 * p.coriolis(q, qd);
      if (std::abs(v.dot(skew * v)) > 1e-10)
        throw ContractError(p.label + ": Ddot - 2C is not skew-symmetric");
    }
  }
}

}  // namespace

ELPlant make_pendulum_el(bool with_viscous) {
  ELPlant p;
  p.dof = 1;
  p.n_params = with_viscous ? 3 : 2;
  p.velocity_damping = with_viscous;
  p.label = with_viscous ? "pendulum_viscous" : "pendulum";
  Vector theta(p.n_params);
  if (with_viscous)
    theta << 1.0, 9.81, 0.1;
  else
    theta << 1.0, 9.81;
  p.theta_true = theta;
  const double th1 = theta[0], th2 = theta[1];
  const double th3 = with_viscous ? theta[2] : 0.0;
  p.inertia = [th1](const Vector&) {
    Matrix m(1, 1);
    m << th1;
    return m;
  };
  p.coriolis = [th3](const Vector&, const Vector&) {
    Matrix m(1, 1);
    m << th3;
    return m;
  };
  p.inertia_dot = [](const Vector&, const Vector&) {
    return Matrix(Matrix::Zero(1, 1));
  };
  p.gravity = [th2](const Vector& q) {
    Vector g(1);
    g << th2 * std::sin(q[0]);
    return g;
  };
  const int np = p.n_params;
  p.regressor4 = [np](const Vector& q, const Vector&, const Vector& w,
                      const Vector& a) {
    Matrix psi(np, 1);
    psi(0, 0) = a[0];
    psi(1, 0) = std::sin(q[0]);
    if (np == 3) psi(2, 0) = w[0];
    return psi;
  };
  check_el_invariants(p);
  return p;
}

ELPlant make_two_link_el() {
  ELPlant p;
  p.dof = 2;
  p.n_params = 3;
  p.label = "two_link";
  Vector theta(3);
  theta << 2.3, 0.4, 0.7;  // lumped inertia parameters, gravity-free arm
  p.theta_true = theta;
  const double t1 = theta[0], t2 = theta[1], t3 = theta[2];
  p.inertia = [t1, t2, t3](const Vector& q) {
    const double c2 = std::cos(q[1]);
    Matrix D(2, 2);
    D << t1 + 2.0 * t2 * c2, t3 + t2 * c2, t3 + t2 * c2, t3;
    return D;
  };
  p.coriolis = [t2](const Vector& q, const Vector& qd) {
    const double s2 = std::sin(q[1]);
    Matrix C(2, 2);
    C << -t2 * s2 * qd[1], -t2 * s2 * (qd[0] + qd[1]), t2 * s2 * qd[0], 0.0;
    return C;
  };
  p.inertia_dot = [t2](const Vector& q, const Vector& qd) {
    const double s2 = std::sin(q[1]);
    Matrix Dd(2, 2);
    Dd << -2.0 * t2 * s2 * qd[1], -t2 * s2 * qd[1], -t2 * s2 * qd[1], 0.0;
    return Dd;
  };
  p.gravity = [](const Vector&) { return Vector(Vector::Zero(2)); };
  p.regressor4 = [](const Vector& q, const Vector& qd, const Vector& w,
                    const Vector& a) {
    const double c2 = std::cos(q[1]);
    const double s2 = std::sin(q[1]);
    Matrix psi(3, 2);
    psi(0, 0) = a[0];
    psi(0, 1) = 0.0;
    psi(1, 0) = c2 * (2.0 * a[0] + a[1]) - s2 * qd[1] * w[0] -
                s2 * (qd[0] + qd[1]) * w[1];
    psi(1, 1) = c2 * a[0] + s2 * qd[0] * w[0];
    psi(2, 0) = a[1];
    psi(2, 1) = a[0] + a[1];
    return psi;
  };
  check_el_invariants(p);
  return p;
}

ReferenceTrajectory sine_reference(int dof, double omega, double amp) {
  ReferenceTrajectory r;
  r.label = "sine";
  r.q = [dof, omega, amp](double t) {
    return Vector(Vector::Constant(dof, amp * std::sin(omega * t)));
  };
  r.qd = [dof, omega, amp](double t) {
    return Vector(Vector::Constant(dof, amp * omega * std::cos(omega * t)));
  };
  r.qdd = [dof, omega, amp](double t) {
    return Vector(
        Vector::Constant(dof, -amp * omega * omega * std::sin(omega * t)));
  };
  return r;
}

ReferenceTrajectory zero_reference(int dof) {
  ReferenceTrajectory r;
  r.label = "zero";
  auto zero = [dof](double) { return Vector(Vector::Zero(dof)); };
  r.q = zero;
  r.qd = zero;
  r.qdd = zero;
  return r;
}

SlotineLiSystem make_slotine_li(const ELPlant& plant,
                                const ReferenceTrajectory& ref,
                                const ControllerConfig& cfg) {
  const int dof = plant.dof;
  const int m = plant.n_params;
  if (cfg.K_d.rows() != dof || cfg.K_d.cols() != dof)
    throw ContractError("make_slotine_li: K_d shape mismatch");
  if (min_eigenvalue(0.5 * (cfg.K_d + cfg.K_d.transpose())) <= 0.0)
    throw ContractError("make_slotine_li: K_d must be SPD");
  if (!(cfg.lambda > 0.0) || !(cfg.gamma > 0.0))
    throw ContractError("make_slotine_li: lambda and gamma must be positive");

  SlotineLiSystem s;
  s.dof = dof;
  s.n_params = m;
  s.cfg = cfg;
  s.sys.dim = 2 * dof + m;
  s.sys.label = "slotine_li:" + plant.label + ":" + ref.label;
  s.sys.params["lambda"] = cfg.lambda;
  s.sys.params["gamma"] = cfg.gamma;

  const double lambda = cfg.lambda;
  const double gamma = cfg.gamma;
  const Matrix Kd = cfg.K_d;
  s.sys.rhs = [plant, ref, lambda, gamma, Kd, dof, m](double t,
                                                      const Vector& y) {
    const Vector qt = y.head(dof);           // tracking error
    const Vector sv = y.segment(dof, dof);   // composite error
    const Vector at = y.tail(m);             // parameter error theta - hat
    const Vector q = ref.q(t) + qt;
    const Vector qt_dot = sv - lambda * qt;
    const Vector qdot = ref.qd(t) + qt_dot;
    const Vector w = ref.qd(t) - lambda * qt;       // reference velocity
    const Vector a = ref.qdd(t) - lambda * qt_dot;  // reference acceleration
    const Matrix psi = plant.regressor4(q, qdot, w, a);
    const Matrix D = plant.inertia(q);
    const Eigen::LLT<Matrix> llt(D);
    if (llt.info() != Eigen::Success)
      throw EvaluationError("slotine_li: inertia not SPD at q");
    const Vector rhs_s = -(psi.transpose() * at) -
                         plant.coriolis(q, qdot) * sv - Kd * sv;
    Vector dy(2 * dof + m);
    dy.head(dof) = qt_dot;
    dy.segment(dof, dof) = llt.solve(rhs_s);
    dy.tail(m) = gamma * (psi * sv);
    return dy;
  };

  s.Phi = TimeSignal(
      [plant, ref](double t) {
        return plant.regressor4(ref.q(t), ref.qd(t), ref.qd(t), ref.qdd(t));
      },
      ref.domain, m, dof, "slotli_regressor:" + ref.label);

  s.V = [plant, ref, lambda, gamma, Kd, dof, m](double t, const Vector& y) {
    const Vector qt = y.head(dof);
    const Vector sv = y.segment(dof, dof);
    const Vector at = y.tail(m);
    const Vector q = ref.q(t) + qt;
    return 0.5 * sv.dot(plant.inertia(q) * sv) + lambda * qt.dot(Kd * qt) +
           0.5 / gamma * at.squaredNorm();
  };
  return s;
}

OdeSystem make_scalar_linear(double k) {
  OdeSystem s;
  s.dim = 1;
  s.label = "scalar_linear";
  s.params["k"] = k;
  s.rhs = [k](double, const Vector& x) { return Vector(-k * x); };
  return s;
}

OdeSystem make_scalar_decay() {
  OdeSystem s;
  s.dim = 1;
  s.label = "scalar_decay";
  s.rhs = [](double t, const Vector& x) { return Vector(-x / (1.0 + t)); };
  return s;
}

OdeSystem make_planar_rotation() {
  OdeSystem s;
  s.dim = 2;
  s.label = "planar_rotation";
  s.rhs = [](double, const Vector& x) {
    Vector dx(2);
    dx << -x[1], x[0];
    return dx;
  };
  return s;
}

std::pair<std::vector<double>, std::vector<double>> fit_monotone_envelope(
    std::vector<std::pair<double, double>> pts) {
  std::sort(pts.begin(), pts.end());
  std::vector<double> s, env;
  double run = -std::numeric_limits<double>::infinity();
  for (const auto& [x, v] : pts) {
    run = std::max(run, v);
    s.push_back(x);
    env.push_back(run);
  }
  return {s, env};
}

double enoughpe_margin(const CertificateMap& map, double rho1_Delta,
                       const std::function<double(double)>& rho4,
                       const std::vector<double>& s_grid) {
  double margin = std::numeric_limits<double>::infinity();
  for (double s : s_grid) {
    if (!(s > 0.0)) continue;
    const double lhs = std::exp(-map.theta_at(s)) * map.gamma_at(s);
    const double rhs = 3.0 * rho1_Delta * rho4(s);
    margin = std::min(margin, lhs - rhs);
  }
  return margin;
}

}  // namespace pelab
