#pragma once

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace pelab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Excitation levels below this are treated as quadrature noise, not
/// genuine excitation; certificates require mu > kMuFloor.
inline constexpr double kMuFloor = 1e-8;

/// Slack allowed on positive-semidefiniteness of windowed Gram matrices.
inline constexpr double kPsdSlack = 1e-9;

/// Closed interval [lo, hi] on the time axis.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const { return hi - lo; }
  bool contains(double t, double slack = 1e-9) const {
    return t >= lo - slack && t <= hi + slack;
  }
  bool contains_window(double t, double T, double slack = 1e-9) const {
    return contains(t, slack) && contains(t + T, slack);
  }
};

/// A requested evaluation point or window lies outside a declared domain.
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A user-supplied function produced a non-finite or ill-shaped value.
class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller violated an operation precondition.
class ContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A config file failed to parse or validate; message names the key.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs body(0..n-1). With threads > 1 iterations are distributed over a
/// small thread pool; callers must make iterations independent and reduce
/// results by index so output stays schedule-independent.
void parallel_for(int n, int threads, const std::function<void(int)>& body);

/// Spearman rank correlation with average ranks on ties. Infinities are
/// ranked (all +inf tie at the top). Returns 0 when either ranking is
/// degenerate (all tied).
double spearman(const std::vector<double>& a, const std::vector<double>& b);

/// Deterministic unit directions: {+1,-1} in dim 1, golden-angle lattice on
/// the circle/sphere for dim 2 and 3, coordinate axes followed by pair
/// diagonals for dim >= 4 (capped at what is enumerable).
std::vector<Vector> sphere_directions(int dim, int count);

/// Shortest-round-trip-ish formatting used by CSV exports (17 significant
/// digits, bit-faithful on read-back).
std::string fmt_g17(double v);

}  // namespace pelab
