#include "pelab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pelab {

namespace {

bool rk4_step(const OdeSystem& sys, double t, const Vector& x, double h,
              Vector& out, Vector& k1_out) {
  const Vector k1 = sys.rhs(t, x);
  if (!k1.allFinite()) return false;
  const Vector k2 = sys.rhs(t + 0.5 * h, Vector(x + 0.5 * h * k1));
  if (!k2.allFinite()) return false;
  const Vector k3 = sys.rhs(t + 0.5 * h, Vector(x + 0.5 * h * k2));
  if (!k3.allFinite()) return false;
  const Vector k4 = sys.rhs(t + h, Vector(x + h * k3));
  if (!k4.allFinite()) return false;
  out = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  k1_out = k1;
  return out.allFinite();
}

}  // namespace

Trajectory integrate(const OdeSystem& sys, double t0, const Vector& x0,
                     double t_end, double step, IntegrateOptions opt) {
  if (!(step > 0.0)) throw ContractError("integrate: step must be > 0");
  if (!(t_end > t0)) throw ContractError("integrate: t_end must exceed t0");
  if (x0.size() != sys.dim)
    throw ContractError("integrate: x0 dim mismatch for system '" + sys.label +
                        "'");

  Trajectory traj;
  traj.t0 = t0;
  traj.x0 = x0;
  traj.step = step;
  const double span = t_end - t0;
  const long n_nodes = static_cast<long>(std::floor(span / step + 1e-9)) + 1;
  traj.times.reserve(n_nodes + 1);
  traj.states.reserve(n_nodes + 1);
  traj.derivs.reserve(n_nodes + 1);

  double t = t0;
  Vector x = x0;
  traj.times.push_back(t);
  traj.states.push_back(x);
  {
    Vector d0 = sys.rhs(t, x);
    if (!d0.allFinite()) {
      traj.derivs.push_back(Vector::Zero(x.size()));
      traj.flags.finite = false;
      traj.flags.escaped = true;
      return traj;
    }
    traj.derivs.push_back(d0);
  }

  while (t < t_end - 1e-12 * std::max(1.0, std::abs(t_end))) {
    const double h = std::min(step, t_end - t);
    Vector next, k1;
    if (!rk4_step(sys, t, x, h, next, k1)) {
      traj.flags.finite = false;
      traj.flags.escaped = true;
      return traj;
    }
    t += h;
    x = next;
    const Vector d = sys.rhs(t, x);
    if (!d.allFinite()) {
      traj.flags.finite = false;
      traj.flags.escaped = true;
      return traj;
    }
    traj.times.push_back(t);
    traj.states.push_back(x);
    traj.derivs.push_back(d);
    if (x.norm() > opt.escape_radius) {
      traj.flags.escaped = true;
      return traj;
    }
  }
  return traj;
}

Vector sample(const Trajectory& traj, double t) {
  if (traj.times.empty()) throw DomainError("sample: empty trajectory");
  const double lo = traj.times.front();
  const double hi = traj.times.back();
  const double slack = 1e-9 * std::max(1.0, std::abs(hi));
  if (t < lo - slack || t > hi + slack)
    throw DomainError("sample: t=" + std::to_string(t) +
                      " outside trajectory range [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
  t = std::clamp(t, lo, hi);
  auto it = std::upper_bound(traj.times.begin(), traj.times.end(), t);
  size_t i = (it == traj.times.begin()) ? 0 : (it - traj.times.begin() - 1);
  if (i + 1 >= traj.times.size()) return traj.states.back();
  if (t == traj.times[i]) return traj.states[i];
  if (t == traj.times[i + 1]) return traj.states[i + 1];

  const double h = traj.times[i + 1] - traj.times[i];
  const double u = (t - traj.times[i]) / h;
  const double u2 = u * u, u3 = u2 * u;
  const double h00 = 2 * u3 - 3 * u2 + 1;
  const double h10 = u3 - 2 * u2 + u;
  const double h01 = -2 * u3 + 3 * u2;
  const double h11 = u3 - u2;
  return h00 * traj.states[i] + (h10 * h) * traj.derivs[i] +
         h01 * traj.states[i + 1] + (h11 * h) * traj.derivs[i + 1];
}

double richardson_check(const OdeSystem& sys, double t0, const Vector& x0,
                        double t_end, double step) {
  const Trajectory a = integrate(sys, t0, x0, t_end, step);
  const Trajectory b = integrate(sys, t0, x0, t_end, 0.5 * step);
  if (a.flags.escaped || b.flags.escaped)
    return std::numeric_limits<double>::infinity();
  return (a.back() - b.back()).cwiseAbs().maxCoeff() / 15.0;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
  os << 't';
  for (int j = 0; j < traj.dim(); ++j) os << ",x" << (j + 1);
  os << '\n';
  for (size_t i = 0; i < traj.times.size(); ++i) {
    os << fmt_g17(traj.times[i]);
    for (int j = 0; j < traj.dim(); ++j)
      os << ',' << fmt_g17(traj.states[i][j]);
    os << '\n';
  }
}

}  // namespace pelab
