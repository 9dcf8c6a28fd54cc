#include <doctest.h>

#include <cmath>

#include "gen.hpp"
#include "ppmp/error.hpp"
#include "ppmp/phase.hpp"

using namespace ppmp;

namespace {

PhaseAngle plane(double y, double y_dot) { return phase_from_plane({y, y_dot, {}}).phase; }

// Independent oracle: the same ODE integrated with a much finer explicit step,
// no wrapping until the end.
double fine_oscillator(double phi0, double phi_t, double omega, double k, double alpha, double horizon,
                       double h = 1e-6) {
  double phi = phi0;
  const auto n = static_cast<long>(std::llround(horizon / h));
  for (long i = 0; i < n; ++i) phi += h * (omega + k * std::sin(phi_t - phi + alpha));
  return wrap_angle(phi);
}

double integrate(double phi0, double phi_t, Coupling c, double dt, double horizon, double omega = 0.0) {
  OscillatorState s;
  s.phi_robot = PhaseAngle(phi0);
  s.omega = omega;
  const auto n = static_cast<long>(std::llround(horizon / dt));
  for (long i = 0; i < n; ++i) s = step_oscillator(s, PhaseAngle(phi_t), c, dt);
  return s.phi_robot.radians();
}

}  // namespace

TEST_CASE("wrap convention maps -pi to +pi") {
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(0.25 + 4 * kPi) == doctest::Approx(0.25));
}

TEST_CASE("phase from plane: quadrant examples") {
  CHECK(plane(1.0, 0.0).radians() == doctest::Approx(0.0));
  CHECK(plane(0.0, -1.0).radians() == doctest::Approx(kPi / 2));
  CHECK(plane(-1.0, 0.0).radians() == doctest::Approx(kPi));
}

TEST_CASE("phase from plane: normalization and direction") {
  PlaneNormalization n{2.0, 0.5, 4.0, 1.0};
  // y_n = (2.5 - 2) / 0.5 = 1, y_dot_n = 0
  CHECK(phase_from_plane({2.5, 0.0, n}).phase.radians() == doctest::Approx(0.0));
  // y_n = 0, y_dot_n = -4 / 4 = -1
  CHECK(phase_from_plane({2.0, -4.0, n}).phase.radians() == doctest::Approx(kPi / 2));
  n.direction = -1.0;
  CHECK(phase_from_plane({2.5, 0.0, n}).phase.radians() == doctest::Approx(kPi));
}

TEST_CASE("phase from plane: degenerate origin keeps the previous phase") {
  const PhaseEstimate e = phase_from_plane({0.0, 0.0, {}}, PhaseAngle(1.2));
  CHECK(e.degenerate);
  CHECK(e.phase.radians() == doctest::Approx(1.2));
  CHECK(phase_from_plane({0.0, 0.0, {}}).phase.radians() == 0.0);
}

TEST_CASE("property: phase from plane lies in (-pi, pi]") {
  gen::for_all(11, 2000, [](gen::Rng& r, int) {
    PlaneNormalization n{r.uniform(-1, 1), r.uniform(0.1, 2), r.uniform(0.1, 2), r.coin() ? 1.0 : -1.0};
    // Include exact axis points, where atan2 branch cuts live.
    const double y = r.integer(0, 4) == 0 ? n.y_center - n.y_scale : r.uniform(-3, 3);
    const double yd = r.integer(0, 4) == 0 ? -0.0 : r.uniform(-3, 3);
    const double phi = phase_from_plane({y, yd, n}).phase.radians();
    CHECK(phi > -kPi);
    CHECK(phi <= kPi);
  });
}

TEST_CASE("velocity estimate examples") {
  CHECK(estimate_velocity(1.0, 0.0, 1.0, 123.0, 0.0) == doctest::Approx(1.0));
  CHECK(estimate_velocity(0.7, 0.7, 0.1, 5.0, 0.0) == doctest::Approx(0.0));
  CHECK(estimate_velocity(2.0, 0.0, 1.0, 0.0, 0.5) == doctest::Approx(1.0));
  CHECK_THROWS_AS(estimate_velocity(1.0, 0.0, 0.0, 0.0, 0.5), ConfigError);
  CHECK_THROWS_AS(estimate_velocity(1.0, 0.0, 0.1, 0.0, 1.0), ConfigError);
}

TEST_CASE("oscillator examples") {
  SUBCASE("aligned phases stay put") {
    CHECK(integrate(0.7, 0.7, {30.0, 0.0}, 1e-3, 1.0) == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("alpha = 0 converges onto the target") {
    const double got = integrate(-1.0, 0.4, {30.0, 0.0}, 1e-3, 0.5);
    CHECK(std::fabs(got - 0.4) < 1e-3);
    CHECK(std::fabs(got - fine_oscillator(-1.0, 0.4, 0.0, 30.0, 0.0, 0.5)) < 1e-3);
  }
  SUBCASE("stable offset is the shift") {
    CHECK(integrate(0.0, 1.0, {30.0, 0.3}, 1e-3, 3.0) == doctest::Approx(1.3).epsilon(1e-9));
  }
  SUBCASE("free running at omega") {
    CHECK(integrate(0.0, 0.0, {0.0, 0.0}, 1e-3, 1.0, 2.0) == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("oscillator overshoot is counted when K dt > 1") {
  OscillatorState s;
  s = step_oscillator(s, PhaseAngle(0.5), {2000.0, 0.0}, 1e-3);
  CHECK(s.overshoot_warnings == 1);
  s = step_oscillator(s, PhaseAngle(0.5), {20.0, 0.0}, 1e-3);
  CHECK(s.overshoot_warnings == 1);
  CHECK(s.steps == 2);
}

TEST_CASE("property: contraction toward a constant target") {
  gen::for_all(12, 300, [](gen::Rng& r, int) {
    const double dt = r.uniform(1e-4, 0.05);
    const double k = r.uniform(0.01, 0.999) / dt;
    const double target = r.angle();
    OscillatorState s;
    s.phi_robot = PhaseAngle(target + r.uniform(-kPi + 1e-3, kPi - 1e-3));
    double prev = std::fabs(wrap_difference(target, s.phi_robot.radians()));
    for (int i = 0; i < 200; ++i) {
      s = step_oscillator(s, PhaseAngle(target), {k, 0.0}, dt);
      const double gap = std::fabs(wrap_difference(target, s.phi_robot.radians()));
      REQUIRE(gap <= prev + 1e-12);
      prev = gap;
    }
  });
}

TEST_CASE("property: bounded phase increment per step") {
  gen::for_all(13, 2000, [](gen::Rng& r, int) {
    OscillatorState s;
    s.phi_robot = PhaseAngle(r.angle());
    s.omega = r.uniform(-20, 20);
    const Coupling c{r.uniform(0, 100), r.uniform(-kPi, kPi)};
    const double dt = r.uniform(1e-4, 0.05);
    const OscillatorState n = step_oscillator(s, PhaseAngle(r.angle()), c, dt);
    const double step = std::fabs(wrap_difference(n.phi_robot.radians(), s.phi_robot.radians()));
    CHECK(step <= (std::fabs(s.omega) + c.stiffness) * dt + 1e-12);
  });
}

TEST_CASE("property: single stroke stays within [0, pi]") {
  gen::for_all(14, 500, [](gen::Rng& r, int) {
    OscillatorState s;
    s.mode = PhaseMode::single_stroke;
    s.phi_robot = PhaseAngle(r.uniform(0, kPi));
    s.omega = r.uniform(-10, 10);
    for (int i = 0; i < 50; ++i) {
      s = step_oscillator(s, PhaseAngle(r.angle()), {r.uniform(0, 60), r.uniform(-kPi, kPi)}, r.uniform(1e-3, 0.05));
      REQUIRE(s.phi_robot.radians() >= 0.0);
      REQUIRE(s.phi_robot.radians() <= kPi);
    }
  });
  CHECK(clamp_single_stroke(-0.1) == 0.0);
  CHECK(clamp_single_stroke(3.5) == kPi);
}

// Local Euler error is dt^2/2 |phi''| <= dt^2 K (|omega| + K) / 2, so the
// 10 K dt^2 bound holds while |omega| + K <= 20.
TEST_CASE("property: Euler step agrees with ten sub-steps") {
  gen::for_all(15, 2000, [](gen::Rng& r, int) {
    const double k = r.uniform(0.0, 15.0);
    const double omega = r.uniform(-(20 - k), 20 - k);
    const Coupling c{k, r.uniform(-kPi, kPi)};
    const double dt = r.uniform(1e-4, 0.05);
    const PhaseAngle target(r.angle());
    OscillatorState s;
    s.phi_robot = PhaseAngle(r.angle());
    s.omega = omega;
    const OscillatorState coarse = step_oscillator(s, target, c, dt);
    OscillatorState fine = s;
    for (int i = 0; i < 10; ++i) fine = step_oscillator(fine, target, c, dt / 10);
    CHECK(std::fabs(wrap_difference(coarse.phi_robot.radians(), fine.phi_robot.radians())) <=
          10 * k * dt * dt + 1e-12);
  });
}

TEST_CASE("tracker turns a sampled sinusoid into a steadily advancing phase") {
  const double w = 2.0;
  const double dt = 1.0 / 30.0;
  PhaseTracker tr({0.0, 1.0, w, 1.0}, PhaseMode::cyclic, 0.0);
  double prev = 0.0;
  int forward = 0;
  for (int i = 0; i < 200; ++i) {
    const double phi = tr.update(std::cos(w * i * dt), dt).radians();
    if (i > 2 && wrap_difference(phi, prev) > 0.0) ++forward;
    prev = phi;
  }
  CHECK(forward == 197);
}

TEST_CASE("tracker seed overrides the velocity history") {
  PhaseTracker tr({}, PhaseMode::cyclic, 0.5);
  tr.update(0.0, 0.1);
  tr.seed(0.0, -1.0);
  CHECK(tr.velocity() == -1.0);
  // Next sample continues from the seeded velocity: 0.5 * -1 + 0.5 * 0.
  tr.update(0.0, 0.1);
  CHECK(tr.velocity() == doctest::Approx(-0.5));
}
