#pragma once

#include "pelab/common.hpp"

#include <functional>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace pelab {

/// Time-varying ODE xdot = rhs(t, x). rhs must be pure.
struct OdeSystem {
  std::function<Vector(double, const Vector&)> rhs;
  int dim = 0;
  std::string label;
  std::map<std::string, double> params;
};

/// Dense fixed-step trajectory. Node derivatives are stored so sampling can
/// interpolate with cubic Hermite without re-evaluating the rhs.
struct Trajectory {
  double t0 = 0.0;
  Vector x0;
  double step = 0.0;
  std::vector<double> times;
  std::vector<Vector> states;
  std::vector<Vector> derivs;
  struct Flags {
    bool finite = true;
    bool escaped = false;
  } flags;

  int dim() const { return static_cast<int>(x0.size()); }
  double t_end() const { return times.empty() ? t0 : times.back(); }
  const Vector& back() const { return states.back(); }
};

struct IntegrateOptions {
  double escape_radius = 1e6;
};

/// Classical fixed-step RK4; the final partial step is shortened to land
/// exactly on t_end. Trajectories whose norm exceeds escape_radius, or whose
/// rhs turns non-finite, are truncated at the last finite sample with the
/// escaped flag set.
Trajectory integrate(const OdeSystem& sys, double t0, const Vector& x0,
                     double t_end, double step, IntegrateOptions opt = {});

/// Cubic Hermite interpolation on the stored grid; exact at grid nodes.
Vector sample(const Trajectory& traj, double t);

/// Integrates at step and step/2 and returns the max-norm endpoint
/// difference scaled by 1/15. +inf when either run escapes.
double richardson_check(const OdeSystem& sys, double t0, const Vector& x0,
                        double t_end, double step);

/// CSV export: header t,x1,...,xn then one row per node, 17 significant
/// digits.
void write_trajectory_csv(const Trajectory& traj, std::ostream& os);

}  // namespace pelab
