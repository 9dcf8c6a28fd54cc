#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "ppmp/angle.hpp"

namespace ppmp {

enum class PhaseMode { cyclic, single_stroke };

std::string_view to_string(PhaseMode mode);
PhaseMode phase_mode_from_string(std::string_view text);

// Affine map from a progress coordinate and its velocity onto the unit phase
// plane. `direction` flips the progress axis so that single-stroke motions that
// increase along the coordinate still traverse the upper half plane.
struct PlaneNormalization {
  double y_center = 0.0;
  double y_scale = 1.0;
  double y_dot_scale = 1.0;
  double direction = 1.0;

  void validate() const;
  friend bool operator==(const PlaneNormalization&, const PlaneNormalization&) = default;
};

struct PlaneSignal {
  double y = 0.0;
  double y_dot = 0.0;
  PlaneNormalization norm;
};

struct PhaseEstimate {
  PhaseAngle phase;
  bool degenerate = false;
};

// Phase-plane angle -atan2(y_dot_n, y_n) of the normalized signal. When both
// normalized components vanish the previous phase (or 0) is returned and the
// estimate is flagged degenerate.
PhaseEstimate phase_from_plane(const PlaneSignal& signal,
                               std::optional<PhaseAngle> previous = std::nullopt);

// Exponentially smoothed finite difference. Throws ConfigError when dt <= 0.
double estimate_velocity(double y_now, double y_prev, double dt, double y_dot_prev,
                         double smoothing);

struct Coupling {
  double stiffness = 0.0;  // K, 1/s
  double shift = 0.0;      // alpha, rad
};

struct OscillatorState {
  PhaseAngle phi_robot;
  double omega = 0.0;
  PhaseMode mode = PhaseMode::cyclic;
  std::uint64_t steps = 0;
  // Number of steps taken with K*dt > 1.
  std::uint64_t overshoot_warnings = 0;
};

// One explicit Euler step of
//   dphi_robot/dt = omega + K sin(phi_target - phi_robot + alpha)
// followed by wrapping (cyclic) or clamping into [0, pi] (single stroke).
OscillatorState step_oscillator(const OscillatorState& state, PhaseAngle phi_target,
                                Coupling coupling, double dt);

// Tracks a noisy progress coordinate and turns it into a phase every tick.
class PhaseTracker {
 public:
  PhaseTracker(PlaneNormalization norm, PhaseMode mode, double smoothing = 0.5);

  PhaseAngle update(double y, double dt);
  void reset();
  // Overrides the history, e.g. when a dragged target is released.
  void seed(double y, double y_dot);

  [[nodiscard]] double velocity() const { return y_dot_; }
  [[nodiscard]] std::optional<PhaseAngle> last() const { return last_; }

 private:
  PlaneNormalization norm_;
  PhaseMode mode_;
  double smoothing_;
  std::optional<double> y_prev_;
  double y_dot_ = 0.0;
  std::optional<PhaseAngle> last_;
};

// Clamp used for single-stroke phases.
double clamp_single_stroke(double radians);

}  // namespace ppmp
