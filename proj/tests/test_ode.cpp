#include "pelab/ode.hpp"
#include "pelab/catalog.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace pelab;

TEST_CASE("exponential decay endpoint matches the closed form") {
  const OdeSystem sys = make_scalar_linear(1.0);
  Vector x0(1);
  x0 << 1.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 1.0, 1e-3);
  CHECK(traj.back()[0] == doctest::Approx(std::exp(-1.0)).epsilon(1e-9));
  CHECK(traj.times.front() == 0.0);
  CHECK(traj.states.front()[0] == 1.0);
}

TEST_CASE("zero rhs keeps the state constant") {
  OdeSystem sys;
  sys.dim = 2;
  sys.rhs = [](double, const Vector& x) { return Vector(Vector::Zero(x.size())); };
  Vector x0(2);
  x0 << 3.0, -4.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 2.0, 1e-2);
  for (const auto& x : traj.states) CHECK((x - x0).norm() == 0.0);
}

TEST_CASE("rotation returns to the start and conserves the norm") {
  const OdeSystem sys = make_planar_rotation();
  Vector x0(2);
  x0 << 1.0, 0.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 2.0 * M_PI, 1e-3);
  CHECK((traj.back() - x0).norm() < 1e-8);
  for (const auto& x : traj.states) CHECK(std::abs(x.norm() - 1.0) < 1e-9);
}

TEST_CASE("sample is exact at nodes and accurate between them") {
  const OdeSystem sys = make_planar_rotation();
  Vector x0(2);
  x0 << 1.0, 0.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 7.0, 1e-3);
  CHECK((sample(traj, 0.0) - x0).norm() == 0.0);
  CHECK((sample(traj, traj.times[1234]) - traj.states[1234]).norm() == 0.0);
  Vector expect(2);
  expect << 0.0, 1.0;
  CHECK((sample(traj, M_PI / 2.0) - expect).norm() < 1e-6);
  CHECK_THROWS_AS(sample(traj, 7.5), DomainError);
}

TEST_CASE("richardson estimate is tiny on a smooth linear problem") {
  const OdeSystem sys = make_scalar_linear(1.0);
  Vector x0(1);
  x0 << 1.0;
  CHECK(richardson_check(sys, 0.0, x0, 1.0, 1e-3) < 1e-10);
}

TEST_CASE("order-4 convergence: halving the step cuts the error ~16x") {
  const OdeSystem sys = make_scalar_linear(1.0);
  Vector x0(1);
  x0 << 1.0;
  const double exact = std::exp(-1.0);
  std::vector<double> errs;
  for (double h : {1e-2, 5e-3, 2.5e-3}) {
    const Trajectory t = integrate(sys, 0.0, x0, 1.0, h);
    errs.push_back(std::abs(t.back()[0] - exact));
  }
  for (size_t i = 1; i < errs.size(); ++i) {
    const double ratio = errs[i - 1] / errs[i];
    CHECK(ratio > 8.0);
    CHECK(ratio < 32.0);
  }
}

TEST_CASE("richardson estimate shrinks ~16x per halving") {
  const OdeSystem sys = make_scalar_linear(2.0);
  Vector x0(1);
  x0 << 1.0;
  const double e1 = richardson_check(sys, 0.0, x0, 1.0, 2e-2);
  const double e2 = richardson_check(sys, 0.0, x0, 1.0, 1e-2);
  CHECK(e1 / e2 > 8.0);
  CHECK(e1 / e2 < 32.0);
}

TEST_CASE("finite-time blowup truncates with the escaped flag") {
  OdeSystem sys;
  sys.dim = 1;
  sys.label = "blowup";
  sys.rhs = [](double, const Vector& x) { return Vector(x.array().square()); };
  Vector x0(1);
  x0 << 1.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 2.0, 1e-4);
  CHECK(traj.flags.escaped);
  CHECK(traj.t_end() < 2.0);
  for (const auto& x : traj.states) CHECK(x.allFinite());
  CHECK(std::isinf(richardson_check(sys, 0.0, x0, 2.0, 1e-4)));
}

TEST_CASE("non-finite rhs truncates and clears the finite flag") {
  OdeSystem sys;
  sys.dim = 1;
  sys.label = "sqrt_drain";
  sys.rhs = [](double, const Vector& x) {
    Vector d(1);
    d[0] = -std::sqrt(x[0]);  // NaN once x goes negative
    return d;
  };
  Vector x0(1);
  x0 << 0.25;
  const Trajectory traj = integrate(sys, 0.0, x0, 5.0, 1e-3);
  CHECK(traj.flags.escaped);
  CHECK_FALSE(traj.flags.finite);
  for (const auto& x : traj.states) CHECK(x.allFinite());
}

TEST_CASE("escape radius truncates growing trajectories") {
  const OdeSystem sys = make_scalar_linear(-1.0);  // x' = +x
  Vector x0(1);
  x0 << 1.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 30.0, 1e-3);
  CHECK(traj.flags.escaped);
  CHECK(traj.flags.finite);
  CHECK(traj.t_end() < 15.0);  // ln(1e6) ~ 13.8
}

TEST_CASE("identical inputs give bit-identical trajectories") {
  const OdeSystem sys = make_planar_rotation();
  Vector x0(2);
  x0 << 0.3, 0.7;
  const Trajectory a = integrate(sys, 0.5, x0, 4.0, 1e-3);
  const Trajectory b = integrate(sys, 0.5, x0, 4.0, 1e-3);
  REQUIRE(a.states.size() == b.states.size());
  for (size_t i = 0; i < a.states.size(); ++i) {
    CHECK(a.times[i] == b.times[i]);
    CHECK(a.states[i][0] == b.states[i][0]);
    CHECK(a.states[i][1] == b.states[i][1]);
  }
}

TEST_CASE("csv export carries full precision and the expected header") {
  const OdeSystem sys = make_scalar_linear(1.0);
  Vector x0(1);
  x0 << 1.0 / 3.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 0.01, 1e-2);
  std::ostringstream os;
  write_trajectory_csv(traj, os);
  const std::string text = os.str();
  CHECK(text.rfind("t,x1\n", 0) == 0);
  CHECK(text.find("0.33333333333333331") != std::string::npos);
}

TEST_CASE("final partial step lands exactly on t_end") {
  const OdeSystem sys = make_scalar_linear(1.0);
  Vector x0(1);
  x0 << 1.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 1.0005, 1e-3);
  CHECK(traj.t_end() == doctest::Approx(1.0005).epsilon(1e-15));
}
