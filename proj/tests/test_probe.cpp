#include "pelab/probe.hpp"
#include "pelab/catalog.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "oracles.hpp"

using namespace pelab;

namespace {
constexpr double kTwoPi = 2.0 * M_PI;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

TEST_CASE("settling time of exponential decay hits the closed form") {
  const OdeSystem sys = make_scalar_linear(1.0);
  Vector x0(1);
  x0 << 1.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 5.0, 1e-3);
  const double T = settling_time(traj, std::exp(-1.0));
  CHECK(std::abs(T - 1.0) <= 1e-3 + 1e-12);
}

TEST_CASE("settling time edge cases: zero trajectory and conserved norm") {
  OdeSystem still;
  still.dim = 1;
  still.rhs = [](double, const Vector&) { return Vector(Vector::Zero(1)); };
  const Trajectory z = integrate(still, 0.0, Vector::Zero(1), 1.0, 1e-2);
  CHECK(settling_time(z, 0.5) == 0.0);

  const OdeSystem rot = make_planar_rotation();
  Vector x0(2);
  x0 << 1.0, 0.0;
  const Trajectory orbit = integrate(rot, 0.0, x0, 30.0, 1e-3);
  CHECK(std::isinf(settling_time(orbit, 0.5)));
}

TEST_CASE("settling time is monotone in sigma") {
  const OdeSystem sys = make_scalar_linear(1.0);
  Vector x0(1);
  x0 << 1.0;
  const Trajectory traj = integrate(sys, 0.0, x0, 12.0, 1e-3);
  double prev = kInf;
  for (double sigma : {0.01, 0.05, 0.2, 0.5, 0.9}) {
    const double T = settling_time(traj, sigma);
    CHECK(T <= prev);
    prev = T;
  }
}

TEST_CASE("uniformity probe on the fading-gain scalar system") {
  const UniformityReport rep = uniformity_probe(
      make_scalar_decay(), 1.0, 0.1, {0.0, 10.0, 50.0}, 2, 520.0, 1e-3);
  REQUIRE(rep.settling.size() == 3);
  const double expect[3] = {9.0, 99.0, 459.0};
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(rep.settling[i] - expect[i]) <= 0.02 * expect[i]);
  CHECK(rep.verdict == Verdict::non_uniform);
  CHECK(rep.dispersion > 0.5);
  CHECK(rep.trend >= 0.9);
}

TEST_CASE("uniformity probe on autonomous decay is uniform") {
  const UniformityReport rep = uniformity_probe(
      make_scalar_linear(1.0), 1.0, 0.1, {0.0, 10.0, 50.0}, 2, 60.0, 1e-3);
  CHECK(rep.verdict == Verdict::uniform);
  CHECK(rep.dispersion <= 0.01);
}

TEST_CASE("verdicts survive grid permutation and direction doubling") {
  const auto base = uniformity_probe(make_scalar_decay(), 1.0, 0.1,
                                     {0.0, 10.0, 50.0}, 2, 520.0, 1e-3);
  const auto permuted = uniformity_probe(make_scalar_decay(), 1.0, 0.1,
                                         {50.0, 0.0, 10.0}, 2, 520.0, 1e-3);
  CHECK(base.verdict == permuted.verdict);
  const auto doubled = uniformity_probe(make_scalar_decay(), 1.0, 0.1,
                                        {0.0, 10.0, 50.0}, 4, 520.0, 1e-3);
  CHECK(base.verdict == doubled.verdict);

  const auto u1 = uniformity_probe(make_scalar_linear(1.0), 1.0, 0.1,
                                   {50.0, 0.0, 10.0}, 2, 60.0, 1e-3);
  const auto u2 = uniformity_probe(make_scalar_linear(1.0), 1.0, 0.1,
                                   {0.0, 10.0, 50.0}, 4, 60.0, 1e-3);
  CHECK(u1.verdict == Verdict::uniform);
  CHECK(u2.verdict == Verdict::uniform);
}

TEST_CASE("too-short horizon yields inconclusive, not an error") {
  const UniformityReport rep = uniformity_probe(
      make_scalar_decay(), 1.0, 0.1, {0.0, 10.0, 50.0}, 2, 5.0, 1e-3);
  CHECK(rep.verdict == Verdict::inconclusive);
}

TEST_CASE("growing-settling signature on a partially settled sweep") {
  // Single-sided horizon: early starts settle, late ones do not.
  const UniformityReport rep = uniformity_probe(
      make_scalar_decay(), 1.0, 0.1, {0.0, 10.0, 50.0}, 2, 120.0, 1e-3);
  CHECK(rep.verdict != Verdict::uniform);
  CHECK(rep.growing_settling());
}

TEST_CASE("parallel sweeps reproduce the single-thread report") {
  ProbeOptions par;
  par.threads = 4;
  const auto a = uniformity_probe(make_scalar_decay(), 1.0, 0.1,
                                  {0.0, 10.0, 50.0}, 4, 520.0, 1e-3);
  const auto b = uniformity_probe(make_scalar_decay(), 1.0, 0.1,
                                  {0.0, 10.0, 50.0}, 4, 520.0, 1e-3, par);
  REQUIRE(a.settling.size() == b.settling.size());
  for (size_t i = 0; i < a.settling.size(); ++i)
    CHECK(a.settling[i] == b.settling[i]);
  CHECK(a.verdict == b.verdict);
}

TEST_CASE("ugs envelope of pure decay and pure rotation is the radius") {
  const UgsEnvelope d = ugs_probe(make_scalar_linear(1.0), {0.5, 1.0, 2.0},
                                  {0.0, 10.0}, 2, 20.0, 1e-3);
  REQUIRE(d.gamma_hat.size() == 3);
  CHECK_FALSE(d.violated);
  for (size_t i = 0; i < 3; ++i)
    CHECK(d.gamma_hat[i] == doctest::Approx(d.radii[i]).epsilon(1e-9));

  const UgsEnvelope r = ugs_probe(make_planar_rotation(), {0.5, 1.0, 2.0},
                                  {0.0}, 4, 20.0, 1e-3);
  CHECK_FALSE(r.violated);
  for (size_t i = 0; i < 3; ++i)
    CHECK(r.gamma_hat[i] == doctest::Approx(r.radii[i]).epsilon(1e-8));
}

TEST_CASE("ugs envelope flags escaping systems") {
  const UgsEnvelope e = ugs_probe(make_scalar_linear(-1.0), {1.0}, {0.0}, 2,
                                  30.0, 1e-3);
  CHECK(e.violated);
  CHECK(e.witness_radius == 1.0);
}

TEST_CASE("exponential fit recovers the true rate") {
  const auto out =
      ules_fit(make_scalar_linear(2.0), 1.0, {0.0, 5.0}, 2, 10.0, 1e-3);
  REQUIRE(std::holds_alternative<ExpFit>(out));
  const ExpFit& f = std::get<ExpFit>(out);
  CHECK(f.gamma2 == doctest::Approx(2.0).epsilon(0.005));
  CHECK(f.gamma1 >= 1.0);
  CHECK(f.gamma1 <= 1.1);
  CHECK(f.residual >= 0.0);
}

TEST_CASE("exponential fit envelope covers every sample") {
  const auto out =
      ules_fit(make_scalar_linear(2.0), 1.0, {0.0, 5.0}, 2, 10.0, 1e-3);
  REQUIRE(std::holds_alternative<ExpFit>(out));
  const ExpFit& f = std::get<ExpFit>(out);
  const Trajectory traj = integrate(make_scalar_linear(2.0), 0.0,
                                    Vector::Ones(1), 10.0, 1e-3);
  for (size_t i = 0; i < traj.states.size(); i += 50) {
    const double bound =
        f.gamma1 * std::exp(-f.gamma2 * (traj.times[i] - traj.t0));
    CHECK(traj.states[i].norm() <= bound + 1e-9);
  }
}

TEST_CASE("algebraic decay is reported as a fit failure") {
  const auto out =
      ules_fit(make_scalar_decay(), 1.0, {0.0}, 2, 100.0, 1e-3);
  REQUIRE(std::holds_alternative<UlesFailure>(out));
  const auto& fail = std::get<UlesFailure>(out);
  CHECK(std::abs(fail.slope_second) < std::abs(fail.slope_first));
}

TEST_CASE("adaptive loop near the origin fits an exponential envelope") {
  const MatchingSystem m = make_gradient_adaptive(signals::sine(), -1.0, 1.0);
  const auto out = ules_fit(m.sys, 0.1, {0.0, 11.0}, 4, 60.0, 1e-3);
  REQUIRE(std::holds_alternative<ExpFit>(out));
  CHECK(std::get<ExpFit>(out).gamma2 > 0.0);  // rate recorded, not asserted
}

TEST_CASE("discounted excitation integral: constants, zero and |sin|") {
  const StateFunction one = StateFunction(
      [](double, const Vector&) { return Vector(Vector::Ones(1)); }, 1, 1,
      {-1e6, 1e6}, "one");
  Vector x(1);
  x << 1.0;
  const double c = 0.7;
  const StateFunction cf = StateFunction(
      [c](double, const Vector&) { return Vector(Vector::Constant(1, c)); }, 1,
      1, {-1e6, 1e6}, "const");
  for (double H : {5.0, 10.0}) {
    QuadratureSpec q;
    q.step = 1e-4;
    const VjResult r = vj_plus_1(cf, 0.0, x, H, q, c, 1e-30);
    // Widening pushes H to 60 where e^{-H} is negligible.
    CHECK(r.value == doctest::Approx(-c).epsilon(1e-9));
  }
  const VjResult rH = vj_plus_1(cf, 0.0, x, 5.0, {}, c, 1e-2);
  CHECK(rH.horizon_used == 5.0);
  CHECK(rH.value == doctest::Approx(-c * (1.0 - std::exp(-5.0))).epsilon(1e-6));

  const StateFunction zero = StateFunction(
      [](double, const Vector&) { return Vector(Vector::Zero(1)); }, 1, 1,
      {-1e6, 1e6}, "zero");
  CHECK(vj_plus_1(zero, 0.0, x, 10.0, {}, 1.0).value == 0.0);

  const StateFunction absin = StateFunction(
      [](double t, const Vector&) {
        return Vector(Vector::Constant(1, std::abs(std::sin(t))));
      },
      1, 1, {-1e6, 1e6}, "absin");
  QuadratureSpec q;
  q.step = 1e-4;
  const VjResult rs = vj_plus_1(absin, 0.0, x, 40.0, q, 1.0, 1e-14);
  // Closed form coth(pi/2)/2 = 0.545166; refined-quadrature oracle agrees.
  const double closed = oracle::discounted_abs_sin();
  const double refined = oracle::simpson(
      [](double t) { return std::exp(-t) * std::abs(std::sin(t)); }, 0.0, 40.0,
      400000);
  CHECK(closed == doctest::Approx(refined).epsilon(1e-9));
  CHECK(rs.value == doctest::Approx(-closed).epsilon(1e-7));
}

TEST_CASE("discounted integral truncation obeys the exponential bound") {
  const StateFunction absin = StateFunction(
      [](double t, const Vector&) {
        return Vector(Vector::Constant(1, std::abs(std::sin(t))));
      },
      1, 1, {-1e6, 1e6}, "absin");
  Vector x(1);
  x << 1.0;
  QuadratureSpec q;
  q.step = 1e-4;
  for (double H : {4.0, 8.0, 16.0}) {
    const double vH = vj_plus_1(absin, 0.0, x, H, q, 1.0, 1.0).value;
    const double v2H = vj_plus_1(absin, 0.0, x, 2.0 * H, q, 1.0, 1.0).value;
    CHECK(std::abs(vH - v2H) <= std::exp(-H) + 1e-12);
  }
}

TEST_CASE("derivative inequality holds along an adaptive trajectory") {
  const MatchingSystem m = make_gradient_adaptive(signals::sine(), -1.0, 1.0);
  // phi1 = B0 as a function of the full state: x2 sin t, designated part x2.
  const StateFunction phi1 = StateFunction(
      [](double t, const Vector& x) {
        return Vector(Vector::Constant(1, x[1] * std::sin(t)));
      },
      1, 2, {-1e6, 1e6}, "b0_full_state");
  // Certificate map for s -> (theta, gamma) in ||x2||, built on B0 itself.
  const StateFunction b0 = StateFunction(
      [](double t, const Vector& y) {
        return Vector(Vector::Constant(1, y[0] * std::sin(t)));
      },
      1, 1, {-1e6, 1e6}, "b0");
  CertMapOptions copt;
  copt.T0 = kTwoPi;
  copt.T_max = kTwoPi;
  copt.t_samples = {0.0, 1.5, 3.0, 4.5};
  copt.n_dir = 2;
  copt.n_rad = 2;
  const auto map = certificate_map(b0, 2.0, {0.25, 0.5, 1.0, 2.0}, {}, copt);
  REQUIRE(std::holds_alternative<CertificateMap>(map));

  Vector x0(2);
  x0 << 1.0, 1.0;
  const Trajectory traj = integrate(m.sys, 0.0, x0, 50.0, 1e-3);
  LegoOptions opt;
  opt.n1 = 1;
  opt.fd_step = 1e-2;
  opt.stride = 200;
  const LegoReport rep = lego_check(
      phi1, traj, std::get<CertificateMap>(map), 1.0,
      [](const Vector& x1, const Vector& p) { return x1.norm() + p.norm(); },
      {}, opt);
  CHECK(rep.hypothesis_ok);
  CHECK(rep.max_violation <= 1e-2);
}

TEST_CASE("derivative inequality on the frozen origin trajectory is tight") {
  OdeSystem still;
  still.dim = 2;
  still.rhs = [](double, const Vector&) { return Vector(Vector::Zero(2)); };
  const Trajectory traj = integrate(still, 0.0, Vector::Zero(2), 20.0, 1e-2);
  const StateFunction phi1 = StateFunction(
      [](double t, const Vector& x) {
        return Vector(Vector::Constant(1, x[1] * std::sin(t)));
      },
      1, 2, {-1e6, 1e6}, "b0_full_state");
  CertificateMap map;
  map.Delta = 2.0;
  map.deltas = {0.5, 1.0, 2.0};
  map.gamma = {2.0, 4.0, 8.0};
  map.theta = {kTwoPi, kTwoPi, kTwoPi};
  LegoOptions opt;
  opt.n1 = 1;
  opt.fd_step = 0.1;
  opt.stride = 50;
  const LegoReport rep = lego_check(
      phi1, traj, map, 1.0,
      [](const Vector& x1, const Vector& p) { return x1.norm() + p.norm(); },
      {}, opt);
  CHECK(rep.hypothesis_ok);
  CHECK(std::abs(rep.max_violation) <= 1e-9);
}

TEST_CASE("unexcited phi1 reports hypothesis unmet via the map failure") {
  const StateFunction zero = StateFunction(
      [](double, const Vector&) { return Vector(Vector::Zero(1)); }, 1, 1,
      {-1e6, 1e6}, "zero");
  CertMapOptions copt;
  copt.T0 = 1.0;
  copt.T_max = 4.0;
  copt.t_samples = {0.0, 2.0};
  const auto map = certificate_map(zero, 1.0, {0.5, 1.0}, {}, copt);
  REQUIRE(std::holds_alternative<CertMapFailure>(map));
  OdeSystem still;
  still.dim = 2;
  still.rhs = [](double, const Vector&) { return Vector(Vector::Zero(2)); };
  Vector x0(2);
  x0 << 0.0, 1.0;
  const Trajectory traj = integrate(still, 0.0, x0, 5.0, 1e-2);
  const StateFunction phi1 = StateFunction(
      [](double, const Vector&) { return Vector(Vector::Zero(1)); }, 1, 2,
      {-1e6, 1e6}, "zero_full");
  LegoOptions opt;
  opt.n1 = 1;
  opt.fd_step = 0.1;
  const LegoReport rep = lego_check(
      phi1, traj, map, 1.0,
      [](const Vector& x1, const Vector& p) { return x1.norm() + p.norm(); },
      {}, opt);
  CHECK_FALSE(rep.hypothesis_ok);
}

TEST_CASE("finite-difference step below the grid is a contract error") {
  OdeSystem still;
  still.dim = 2;
  still.rhs = [](double, const Vector&) { return Vector(Vector::Zero(2)); };
  const Trajectory traj = integrate(still, 0.0, Vector::Zero(2), 5.0, 1e-2);
  const StateFunction phi1 = StateFunction(
      [](double, const Vector&) { return Vector(Vector::Zero(1)); }, 1, 2,
      {-1e6, 1e6}, "zero_full");
  CertificateMap map;
  map.Delta = 1.0;
  map.deltas = {1.0};
  map.gamma = {1.0};
  map.theta = {1.0};
  LegoOptions opt;
  opt.n1 = 1;
  opt.fd_step = 1e-2;  // equal to the trajectory grid step
  CHECK_THROWS_AS(
      lego_check(phi1, traj, map, 1.0,
                 [](const Vector&, const Vector&) { return 0.0; }, {}, opt),
      ContractError);
}

TEST_CASE("necessity cells on the closed-form benchmarks are consistent") {
  QuadratureSpec q;
  std::vector<double> t_samples = {0.0, 30.0, 60.0, 90.0, 120.0, 150.0};

  // Decaying scalar: x' = -x, uniform, field norm = ||x||.
  {
    const OdeSystem sys = make_scalar_linear(1.0);
    const auto rep = uniformity_probe(sys, 1.0, 0.1, {0.0, 10.0, 50.0}, 2,
                                      60.0, 1e-3);
    const AnnulusGrid grid =
        AnnulusGrid::build(1, 0, 1.0, 2.0, t_samples, 2, 2);
    const NecessityCell cell = necessity_experiment(
        as_state_function(sys, {-1e5, 1e5}), rep.verdict, grid, 2.0, q);
    CHECK(cell.uniformity == Verdict::uniform);
    CHECK(cell.udpe_certified);
    CHECK(cell.consistent);
  }
  // Fading gain: non-uniform. On a finite domain the fixed-window integral
  // of ||x||/(1+t) still clears the floor (its evidence decays toward zero);
  // the falsification of excitation comes from the running-integral fit.
  // Either way the cell stays off the flagged (uniform, not-excited) corner.
  {
    const OdeSystem sys = make_scalar_decay();
    const auto rep = uniformity_probe(sys, 1.0, 0.1, {0.0, 10.0, 50.0}, 2,
                                      520.0, 1e-3);
    AnnulusGrid grid = AnnulusGrid::build(1, 0, 1.0, 2.0, t_samples, 2, 2);
    const NecessityCell cell = necessity_experiment(
        as_state_function(sys, {0.0, 1e5}), rep.verdict, grid, 2.0, q);
    CHECK(cell.uniformity == Verdict::non_uniform);
    CHECK(cell.consistent);
    Vector one(1);
    one << 1.0;
    const auto mor =
        mornar_scalar_pe(signals::inverse_one_plus_t(), {one},
                         {0.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0}, 100.0);
    CHECK(mor.counterexample.has_value());
  }
  // Rotation: never attractive yet fully excited; necessity says nothing.
  {
    const OdeSystem sys = make_planar_rotation();
    const auto rep = uniformity_probe(sys, 1.0, 0.5, {0.0, 10.0}, 4, 40.0,
                                      1e-3);
    const AnnulusGrid grid =
        AnnulusGrid::build(2, 0, 1.0, 2.0, t_samples, 4, 2);
    const NecessityCell cell = necessity_experiment(
        as_state_function(sys, {-1e5, 1e5}), rep.verdict, grid, 2.0, q);
    CHECK(cell.uniformity == Verdict::inconclusive);
    CHECK(cell.udpe_certified);
    CHECK(cell.consistent);
  }
}

TEST_CASE("field envelope: linear growth for decay, flat for fading gain") {
  const std::vector<double> t0s = {0.0, 20.0, 40.0, 60.0};
  {
    const StateFunction F =
        as_state_function(make_scalar_linear(1.0), {0.0, 1e5});
    const AnnulusGrid grid =
        AnnulusGrid::build(1, 0, 1.0, 2.0, {0.0}, 2, 2);
    const auto res = field_excitation_envelope(F, grid, t0s, 100.0);
    CHECK(res.all_linear);
    // ||F(s, x)|| = ||x|| >= delta: slope at least delta.
    CHECK(res.worst_a == doctest::Approx(1.0).epsilon(1e-9));
  }
  {
    const StateFunction F =
        as_state_function(make_scalar_decay(), {0.0, 1e5});
    const AnnulusGrid grid =
        AnnulusGrid::build(1, 0, 1.0, 2.0, {0.0}, 2, 2);
    const auto res = field_excitation_envelope(F, grid, t0s, 100.0);
    CHECK_FALSE(res.all_linear);
    CHECK(res.worst_a == 0.0);
    CHECK(res.worst_x.has_value());
  }
}

TEST_CASE("udpe sweeps are schedule-independent under threading") {
  const StateFunction psi = signals::rotating_projection();
  const AnnulusGrid grid = AnnulusGrid::build(
      2, 0, 0.5, 1.5, {0.0, 1.0, 2.0, 3.0, 4.0, 5.0}, 8, 2);
  const auto serial = udpe_certificate(psi, grid, kTwoPi, {}, 1);
  const auto parallel = udpe_certificate(psi, grid, kTwoPi, {}, 4);
  REQUIRE(certified(serial));
  REQUIRE(certified(parallel));
  CHECK(certificate(serial).mu == certificate(parallel).mu);
  REQUIRE(certificate(serial).evidence.size() ==
          certificate(parallel).evidence.size());
  for (size_t i = 0; i < certificate(serial).evidence.size(); ++i)
    CHECK(certificate(serial).evidence[i].value ==
          certificate(parallel).evidence[i].value);
}

TEST_CASE("uniformity report serializes settling tables and verdicts") {
  const UniformityReport rep = uniformity_probe(
      make_scalar_linear(1.0), 1.0, 0.1, {0.0, 10.0}, 2, 30.0, 1e-3);
  const auto j = rep.to_json();
  CHECK(j.at("verdict") == "uniform");
  CHECK(j.at("settling").size() == 2);
  std::ostringstream csv;
  rep.write_settling_csv(csv);
  CHECK(csv.str().rfind("t0,direction_index,T\n", 0) == 0);
}
