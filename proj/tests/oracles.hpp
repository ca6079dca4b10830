#pragma once

// Closed-form and refined-quadrature oracles used to freeze expected values.
// Everything here is independent of the library's quadrature and integrator
// paths: antiderivatives where they exist, a test-local Simpson rule where
// they do not.

#include <cmath>
#include <functional>

namespace oracle {

// Antiderivative of |sin|: F(t) = 2 floor(t/pi) + 1 - cos(t - pi floor(t/pi)).
inline double abs_sin_antiderivative(double t) {
  const double k = std::floor(t / M_PI);
  return 2.0 * k + 1.0 - std::cos(t - M_PI * k);
}

inline double integral_abs_sin(double a, double b) {
  return abs_sin_antiderivative(b) - abs_sin_antiderivative(a);
}

// int_a^b sin^2, cos^2, sin cos.
inline double integral_sin2(double a, double b) {
  return 0.5 * (b - a) - 0.25 * (std::sin(2 * b) - std::sin(2 * a));
}
inline double integral_cos2(double a, double b) {
  return 0.5 * (b - a) + 0.25 * (std::sin(2 * b) - std::sin(2 * a));
}
inline double integral_sincos(double a, double b) {
  return 0.25 * (std::cos(2 * a) - std::cos(2 * b));
}

// int_a^b (1+t)^-2 dt.
inline double integral_inv_sq(double a, double b) {
  return 1.0 / (1.0 + a) - 1.0 / (1.0 + b);
}

// Test-local composite Simpson, n even.
inline double simpson(const std::function<double(double)>& f, double a,
                      double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  double acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
  return acc * h / 3.0;
}

// int_0^inf e^{-tau} |sin tau| dtau = coth(pi/2) / 2.
inline double discounted_abs_sin() {
  return 0.5 * std::cosh(M_PI / 2.0) / std::sinh(M_PI / 2.0);
}

}  // namespace oracle
