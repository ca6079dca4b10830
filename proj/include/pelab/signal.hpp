#pragma once

#include "pelab/common.hpp"

#include <functional>
#include <string>

namespace pelab {

enum class QuadRule { trapezoid, simpson };

/// Composite quadrature settings for window integrals. step <= 0 selects
/// the default 1e-3 * min(T, 1) for a window of length T. Simpson windows
/// are padded to an even number of subintervals.
struct QuadratureSpec {
  QuadRule rule = QuadRule::simpson;
  double step = 0.0;

  double step_for(double T) const {
    const double s = step > 0.0 ? step : 1e-3 * std::min(T, 1.0);
    return std::min(s, T);
  }
};

/// Matrix-valued function of time with a declared evaluation domain.
/// The callable must be pure: repeated evaluation at the same t returns
/// identical values.
class TimeSignal {
 public:
  TimeSignal() = default;
  TimeSignal(std::function<Matrix(double)> eval, Interval domain, int rows,
             int cols, std::string label = "");

  /// Evaluates at t; throws DomainError outside the domain and
  /// EvaluationError on non-finite or wrongly shaped output.
  Matrix operator()(double t) const;

  const Interval& domain() const { return domain_; }
  int rows() const { return rows_; }
  int cols() const { return cols_; }
  const std::string& label() const { return label_; }

 private:
  std::function<Matrix(double)> eval_;
  Interval domain_{};
  int rows_ = 0;
  int cols_ = 0;
  std::string label_;
};

/// Vector-valued function of (t, x) with a declared state partition: the
/// first n1 components of x are the designated part, the remaining n - n1
/// are the rest.
class StateFunction {
 public:
  StateFunction() = default;
  StateFunction(std::function<Vector(double, const Vector&)> eval, int n1,
                int n, Interval domain_t, std::string label = "");

  Vector operator()(double t, const Vector& x) const;

  int n1() const { return n1_; }
  int n2() const { return n_ - n1_; }
  int state_dim() const { return n_; }
  const Interval& domain_t() const { return domain_t_; }
  const std::string& label() const { return label_; }

 private:
  std::function<Vector(double, const Vector&)> eval_;
  int n1_ = 0;
  int n_ = 0;
  Interval domain_t_{};
  std::string label_;
};

/// Composite quadrature of a scalar integrand over [t, t+T].
double integrate_window(const std::function<double(double)>& f, double t,
                        double T, const QuadratureSpec& q);

/// Composite quadrature of a matrix integrand over [t, t+T].
Matrix integrate_matrix_window(const std::function<Matrix(double)>& f,
                               double t, double T, const QuadratureSpec& q);

/// Quadrature of tau -> ||f(tau, x)||_2 over [t, t+T]. Nonnegative.
double window_integral_norm(const StateFunction& f, const Vector& x, double t,
                            double T, const QuadratureSpec& q);

/// Quadrature of tau -> S(tau) S(tau)^T over [t, t+T], symmetrized to kill
/// rounding asymmetry. Positive semidefinite up to kPsdSlack.
Matrix window_gram(const TimeSignal& S, double t, double T,
                   const QuadratureSpec& q);

/// Smallest eigenvalue of a symmetric matrix; asymmetry beyond tolerance is
/// a ContractError.
double min_eigenvalue(const Matrix& M);

/// Signal backed by a CSV sample table (columns: t, entries row-major),
/// linearly interpolated between samples. Domain is [first t, last t].
TimeSignal csv_signal(const std::string& path, int rows, int cols);

namespace signals {

/// amp * sin(omega t), scalar.
TimeSignal sine(double omega = 1.0, double amp = 1.0,
                Interval domain = {-1e6, 1e6});
/// amp * |sin(omega t)|, scalar.
TimeSignal abs_sine(double omega = 1.0, double amp = 1.0,
                    Interval domain = {-1e6, 1e6});
/// Column (sin omega t, cos omega t).
TimeSignal sin_cos_column(double omega = 1.0, double amp = 1.0,
                          Interval domain = {-1e6, 1e6});
/// Constant matrix.
TimeSignal constant(const Matrix& value, Interval domain = {-1e6, 1e6});
/// 1 / (1 + t), scalar, domain [0, hi].
TimeSignal inverse_one_plus_t(double hi = 1e6);
/// Identity matrix of size n.
TimeSignal identity(int n, Interval domain = {-1e6, 1e6});

/// psi(t, x) = x1 sin t - x2 cos t: the projection of a planar state onto
/// a rotating unit vector. Partitioned with respect to the full state.
StateFunction rotating_projection(Interval domain = {-1e6, 1e6});

/// f(t, x) = x[index], partitioned so that the first n1 components are the
/// designated part.
StateFunction component_pick(int n, int index, int n1,
                             Interval domain = {-1e6, 1e6});

/// phi(t, x) = Phi(t)^T x for an n x m signal; partition = full state.
StateFunction linear_in_state(const TimeSignal& Phi);

/// phi(t, x) = (Phi(t)^T x)^p entrywise for scalar Phi^T x; used by the
/// power/bridge checks.
StateFunction linear_in_state_power(const TimeSignal& Phi, double p);

/// Wraps a trajectory-valued callable as a StateFunction of t alone; the
/// state argument is ignored (dim 1 placeholder).
StateFunction of_time(std::function<Vector(double)> value, Interval domain,
                      std::string label = "");

}  // namespace signals

}  // namespace pelab
