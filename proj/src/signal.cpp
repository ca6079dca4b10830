#include "pelab/signal.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <utility>

namespace pelab {

TimeSignal::TimeSignal(std::function<Matrix(double)> eval, Interval domain,
                       int rows, int cols, std::string label)
    : eval_(std::move(eval)),
      domain_(domain),
      rows_(rows),
      cols_(cols),
      label_(std::move(label)) {
  if (rows_ <= 0 || cols_ <= 0)
    throw ContractError("TimeSignal: non-positive shape");
  if (domain_.hi < domain_.lo)
    throw ContractError("TimeSignal: empty domain");
}

Matrix TimeSignal::operator()(double t) const {
  if (!domain_.contains(t))
    throw DomainError("TimeSignal '" + label_ + "': t=" + std::to_string(t) +
                      " outside domain [" + std::to_string(domain_.lo) + ", " +
                      std::to_string(domain_.hi) + "]");
  Matrix v = eval_(t);
  if (v.rows() != rows_ || v.cols() != cols_)
    throw EvaluationError("TimeSignal '" + label_ + "': shape mismatch at t=" +
                          std::to_string(t));
  if (!v.allFinite())
    throw EvaluationError("TimeSignal '" + label_ + "': non-finite value at t=" +
                          std::to_string(t));
  return v;
}

StateFunction::StateFunction(std::function<Vector(double, const Vector&)> eval,
                             int n1, int n, Interval domain_t,
                             std::string label)
    : eval_(std::move(eval)),
      n1_(n1),
      n_(n),
      domain_t_(domain_t),
      label_(std::move(label)) {
  if (n_ <= 0 || n1_ <= 0 || n1_ > n_)
    throw ContractError("StateFunction: partition must satisfy 0 < n1 <= n");
}

Vector StateFunction::operator()(double t, const Vector& x) const {
  if (x.size() != n_)
    throw ContractError("StateFunction '" + label_ + "': state dim " +
                        std::to_string(x.size()) + ", expected " +
                        std::to_string(n_));
  if (!domain_t_.contains(t))
    throw DomainError("StateFunction '" + label_ + "': t=" + std::to_string(t) +
                      " outside domain");
  Vector v = eval_(t, x);
  if (!v.allFinite()) {
    std::ostringstream os;
    os << "StateFunction '" << label_ << "': non-finite value at t=" << t
       << ", x=[" << x.transpose() << "]";
    throw EvaluationError(os.str());
  }
  return v;
}

namespace {

// Node layout shared by all composite rules: n subintervals of width T/n,
// endpoints landing exactly on t and t+T. Simpson needs n even.
int subinterval_count(double T, const QuadratureSpec& q) {
  const double h = q.step_for(T);
  int n = std::max(1, static_cast<int>(std::ceil(T / h - 1e-12)));
  if (q.rule == QuadRule::simpson && n % 2 != 0) ++n;
  return n;
}

}  // namespace

double integrate_window(const std::function<double(double)>& f, double t,
                        double T, const QuadratureSpec& q) {
  if (!(T > 0.0)) throw ContractError("integrate_window: T must be > 0");
  const int n = subinterval_count(T, q);
  const double h = T / n;
  if (q.rule == QuadRule::trapezoid) {
    double acc = 0.5 * (f(t) + f(t + T));
    for (int i = 1; i < n; ++i) acc += f(t + i * h);
    return acc * h;
  }
  double acc = f(t) + f(t + T);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(t + i * h);
  return acc * h / 3.0;
}

Matrix integrate_matrix_window(const std::function<Matrix(double)>& f,
                               double t, double T, const QuadratureSpec& q) {
  if (!(T > 0.0))
    throw ContractError("integrate_matrix_window: T must be > 0");
  const int n = subinterval_count(T, q);
  const double h = T / n;
  if (q.rule == QuadRule::trapezoid) {
    Matrix acc = 0.5 * (f(t) + f(t + T));
    for (int i = 1; i < n; ++i) acc += f(t + i * h);
    return acc * h;
  }
  Matrix acc = f(t) + f(t + T);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(t + i * h);
  return acc * (h / 3.0);
}

double window_integral_norm(const StateFunction& f, const Vector& x, double t,
                            double T, const QuadratureSpec& q) {
  if (!(T > 0.0)) throw ContractError("window_integral_norm: T must be > 0");
  if (!f.domain_t().contains_window(t, T))
    throw DomainError("window_integral_norm: window [" + std::to_string(t) +
                      ", " + std::to_string(t + T) + "] outside domain of '" +
                      f.label() + "'");
  return integrate_window([&](double tau) { return f(tau, x).norm(); }, t, T,
                          q);
}

Matrix window_gram(const TimeSignal& S, double t, double T,
                   const QuadratureSpec& q) {
  if (!(T > 0.0)) throw ContractError("window_gram: T must be > 0");
  if (!S.domain().contains_window(t, T))
    throw DomainError("window_gram: window [" + std::to_string(t) + ", " +
                      std::to_string(t + T) + "] outside domain of '" +
                      S.label() + "'");
  Matrix G = integrate_matrix_window(
      [&](double tau) {
        const Matrix v = S(tau);
        return Matrix(v * v.transpose());
      },
      t, T, q);
  return 0.5 * (G + G.transpose());
}

double min_eigenvalue(const Matrix& M) {
  if (M.rows() != M.cols()) throw ContractError("min_eigenvalue: not square");
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-8 * scale)
    throw ContractError("min_eigenvalue: matrix asymmetric beyond tolerance");
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (M + M.transpose()),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

TimeSignal csv_signal(const std::string& path, int rows, int cols) {
  std::ifstream in(path);
  if (!in) throw ConfigError("csv_signal: cannot open " + path);
  std::vector<double> times;
  std::vector<Matrix> values;
  std::string line;
  const int entries = rows * cols;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> nums;
    bool numeric = true;
    while (std::getline(ss, tok, ',')) {
      try {
        size_t pos = 0;
        nums.push_back(std::stod(tok, &pos));
      } catch (...) {
        numeric = false;
        break;
      }
    }
    if (!numeric) continue;  // header row
    if (static_cast<int>(nums.size()) != entries + 1)
      throw ConfigError("csv_signal: row with " + std::to_string(nums.size()) +
                        " fields, expected " + std::to_string(entries + 1) +
                        " in " + path);
    times.push_back(nums[0]);
    Matrix m(rows, cols);
    for (int i = 0; i < entries; ++i) m(i / cols, i % cols) = nums[1 + i];
    values.push_back(m);
  }
  if (times.size() < 2)
    throw ConfigError("csv_signal: need at least two samples in " + path);
  for (size_t i = 1; i < times.size(); ++i)
    if (times[i] <= times[i - 1])
      throw ConfigError("csv_signal: non-increasing time column in " + path);
  Interval domain{times.front(), times.back()};
  auto eval = [times = std::move(times),
               values = std::move(values)](double t) -> Matrix {
    auto it = std::upper_bound(times.begin(), times.end(), t);
    if (it == times.begin()) return values.front();
    if (it == times.end()) return values.back();
    const size_t j = it - times.begin();
    const double w = (t - times[j - 1]) / (times[j] - times[j - 1]);
    return (1.0 - w) * values[j - 1] + w * values[j];
  };
  return TimeSignal(eval, domain, rows, cols, "csv:" + path);
}

namespace signals {

TimeSignal sine(double omega, double amp, Interval domain) {
  return TimeSignal(
      [=](double t) {
        Matrix m(1, 1);
        m(0, 0) = amp * std::sin(omega * t);
        return m;
      },
      domain, 1, 1, "sine");
}

TimeSignal abs_sine(double omega, double amp, Interval domain) {
  return TimeSignal(
      [=](double t) {
        Matrix m(1, 1);
        m(0, 0) = amp * std::abs(std::sin(omega * t));
        return m;
      },
      domain, 1, 1, "abs_sine");
}

TimeSignal sin_cos_column(double omega, double amp, Interval domain) {
  return TimeSignal(
      [=](double t) {
        Matrix m(2, 1);
        m(0, 0) = amp * std::sin(omega * t);
        m(1, 0) = amp * std::cos(omega * t);
        return m;
      },
      domain, 2, 1, "sin_cos_column");
}

TimeSignal constant(const Matrix& value, Interval domain) {
  return TimeSignal([value](double) { return value; }, domain,
                    static_cast<int>(value.rows()),
                    static_cast<int>(value.cols()), "constant");
}

TimeSignal inverse_one_plus_t(double hi) {
  return TimeSignal(
      [](double t) {
        Matrix m(1, 1);
        m(0, 0) = 1.0 / (1.0 + t);
        return m;
      },
      Interval{0.0, hi}, 1, 1, "inverse_one_plus_t");
}

TimeSignal identity(int n, Interval domain) {
  return TimeSignal([n](double) { return Matrix(Matrix::Identity(n, n)); },
                    domain, n, n, "identity");
}

StateFunction rotating_projection(Interval domain) {
  return StateFunction(
      [](double t, const Vector& x) {
        Vector v(1);
        v[0] = x[0] * std::sin(t) - x[1] * std::cos(t);
        return v;
      },
      2, 2, domain, "rotating_projection");
}

StateFunction component_pick(int n, int index, int n1, Interval domain) {
  if (index < 0 || index >= n)
    throw ContractError("component_pick: index out of range");
  return StateFunction(
      [index](double, const Vector& x) {
        Vector v(1);
        v[0] = x[index];
        return v;
      },
      n1, n, domain, "component_pick");
}

StateFunction linear_in_state(const TimeSignal& Phi) {
  const int n = Phi.rows();
  return StateFunction(
      [Phi](double t, const Vector& x) { return Vector(Phi(t).transpose() * x); },
      n, n, Phi.domain(), "linear:" + Phi.label());
}

StateFunction linear_in_state_power(const TimeSignal& Phi, double p) {
  if (Phi.cols() != 1)
    throw ContractError("linear_in_state_power: needs a column signal");
  const int n = Phi.rows();
  return StateFunction(
      [Phi, p](double t, const Vector& x) {
        const double s = (Phi(t).transpose() * x)(0, 0);
        Vector v(1);
        v[0] = std::pow(std::abs(s), p);
        return v;
      },
      n, n, Phi.domain(), "linear_pow:" + Phi.label());
}

StateFunction of_time(std::function<Vector(double)> value, Interval domain,
                      std::string label) {
  return StateFunction(
      [value = std::move(value)](double t, const Vector&) { return value(t); },
      1, 1, domain, std::move(label));
}

}  // namespace signals

}  // namespace pelab
