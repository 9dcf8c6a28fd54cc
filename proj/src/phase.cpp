#include "ppmp/phase.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ppmp/error.hpp"

namespace ppmp {

namespace {
constexpr double kDegenerateTol = 1e-12;
}

std::string_view to_string(PhaseMode mode) {
  return mode == PhaseMode::cyclic ? "cyclic" : "single_stroke";
}

PhaseMode phase_mode_from_string(std::string_view text) {
  if (text == "cyclic") return PhaseMode::cyclic;
  if (text == "single_stroke") return PhaseMode::single_stroke;
  throw ConfigError("unknown phase mode '" + std::string(text) +
                    "' (expected cyclic or single_stroke)");
}

void PlaneNormalization::validate() const {
  if (!(y_scale > 0.0) || !(y_dot_scale > 0.0)) {
    throw ConfigError("phase-plane scales must be positive");
  }
  if (direction != 1.0 && direction != -1.0) {
    throw ConfigError("phase-plane direction must be +1 or -1");
  }
  if (!std::isfinite(y_center)) throw ConfigError("phase-plane center is not finite");
}

double clamp_single_stroke(double radians) {
  const double wrapped = wrap_angle(radians);
  if (wrapped >= 0.0) return wrapped;
  // Below the axis: closer to the start (0) or past the end (pi).
  return wrapped < -kPi / 2 ? kPi : 0.0;
}

PhaseEstimate phase_from_plane(const PlaneSignal& signal, std::optional<PhaseAngle> previous) {
  signal.norm.validate();
  const double yn = signal.norm.direction * (signal.y - signal.norm.y_center) / signal.norm.y_scale;
  const double ydn = signal.norm.direction * signal.y_dot / signal.norm.y_dot_scale;
  if (!std::isfinite(yn) || !std::isfinite(ydn)) {
    throw NumericError("phase_from_plane: non-finite phase-plane coordinates");
  }
  if (std::fabs(yn) < kDegenerateTol && std::fabs(ydn) < kDegenerateTol) {
    return {previous.value_or(PhaseAngle{}), true};
  }
  return {PhaseAngle(-std::atan2(ydn, yn)), false};
}

double estimate_velocity(double y_now, double y_prev, double dt, double y_dot_prev,
                         double smoothing) {
  if (!(dt > 0.0)) throw ConfigError("estimate_velocity: dt must be positive");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw ConfigError("estimate_velocity: smoothing must lie in [0, 1)");
  }
  return smoothing * y_dot_prev + (1.0 - smoothing) * (y_now - y_prev) / dt;
}

OscillatorState step_oscillator(const OscillatorState& state, PhaseAngle phi_target,
                                Coupling coupling, double dt) {
  if (!(dt > 0.0)) throw ConfigError("step_oscillator: dt must be positive");
  if (std::isnan(coupling.stiffness) || std::isnan(coupling.shift) ||
      std::isnan(state.omega) || std::isnan(phi_target.radians())) {
    throw NumericError("step_oscillator: NaN input");
  }
  if (coupling.stiffness < 0.0) throw ConfigError("step_oscillator: K must be non-negative");

  OscillatorState next = state;
  const double phi = state.phi_robot.radians();
  const double rate =
      state.omega + coupling.stiffness * std::sin(phi_target.radians() - phi + coupling.shift);
  const double advanced = phi + dt * rate;

  if (state.mode == PhaseMode::single_stroke) {
    next.phi_robot = PhaseAngle(std::clamp(advanced, 0.0, kPi));
  } else {
    next.phi_robot = PhaseAngle(advanced);
  }
  ++next.steps;
  if (coupling.stiffness * dt > 1.0) ++next.overshoot_warnings;
  return next;
}

PhaseTracker::PhaseTracker(PlaneNormalization norm, PhaseMode mode, double smoothing)
    : norm_(norm), mode_(mode), smoothing_(smoothing) {
  norm_.validate();
  if (!(smoothing >= 0.0 && smoothing < 1.0)) {
    throw ConfigError("PhaseTracker: smoothing must lie in [0, 1)");
  }
}

PhaseAngle PhaseTracker::update(double y, double dt) {
  if (y_prev_) y_dot_ = estimate_velocity(y, *y_prev_, dt, y_dot_, smoothing_);
  y_prev_ = y;
  PhaseEstimate est = phase_from_plane({y, y_dot_, norm_}, last_);
  PhaseAngle phase = est.phase;
  if (mode_ == PhaseMode::single_stroke) phase = PhaseAngle(clamp_single_stroke(phase.radians()));
  last_ = phase;
  return phase;
}

void PhaseTracker::reset() {
  y_prev_.reset();
  y_dot_ = 0.0;
  last_.reset();
}

void PhaseTracker::seed(double y, double y_dot) {
  y_prev_ = y;
  y_dot_ = y_dot;
}

}  // namespace ppmp
