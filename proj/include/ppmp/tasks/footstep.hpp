#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "ppmp/kinematics.hpp"
#include "ppmp/portrait.hpp"

namespace ppmp {

struct SineComponent {
  double amplitude = 0.0;
  double frequency = 0.0;  // Hz
  double phase = 0.0;
};

// Swing leg in the frontal plane: hip above the ground, the foot follows
//   x = x_target (1 + cos phi) / 2,  height = foot_low + (foot_high - foot_low) (1 - cos phi) / 2
// so it touches down at x_target when the gait phase crosses zero.
struct FootstepParams {
  double period = 0.8;
  double hip_y = 0.85;
  std::vector<double> links{0.4, 0.4, 0.1};
  std::vector<std::pair<double, double>> limits{{-1.2, 1.2}, {0.0, 2.6}, {-2.0, 0.5}};
  double foot_low = 0.05;
  double foot_high = 0.15;
  // Demonstrations draw their targets from target_mean +- target_span.
  double target_mean = 0.12;
  double target_span = 0.09;
  // Lateral target schedule around target_mean.
  std::vector<SineComponent> schedule{{0.06, 0.13, 0.0}, {0.03, 0.31, 1.0}};
  double dt = 1e-3;
  double duration = 20.0;
  double demo_dt = 0.01;
  // Pi^BB updates a DMP planner completes per second of simulated time.
  double dmp_update_rate = 30.0;

  void validate() const;
  [[nodiscard]] double omega() const;
  [[nodiscard]] double target(double t) const;
  [[nodiscard]] double gait_phase(double t) const;  // wrapped
  [[nodiscard]] Eigen::Vector2d foot(double x_target, double phi) const;
};

KinematicChain footstep_leg(const FootstepParams& params);

// Cycle over [0, period) at demo_dt; x = [cos(gait phase), lateral target].
// Demo 0 uses target_mean.
DemonstrationSet synth_footstep_demos(const FootstepParams& params, const KinematicChain& leg, int count,
                                      std::uint64_t seed);

struct PlacementResult {
  std::vector<double> errors;  // one per touchdown
  double mean_error = 0.0;
  double max_error = 0.0;
  double plan_ms = 0.0;  // mean wall time per plan
  long plans = 0;
  // FNV-1a over the bit patterns of every lateral target read, in tick order.
  std::uint64_t target_digest = 0xcbf29ce484222325ULL;
};

void digest_target(PlacementResult& r, double target);

void summarize(PlacementResult& r);

// PPMP foot placement: coupling fixed to (K, alpha), oscillator natural
// frequency equal to the gait frequency, one conditioning per tick.
PlacementResult run_footstep_ppmp(const FootstepParams& params, const KinematicChain& leg,
                                  const PhasePortrait& portrait, double stiffness, double shift);

}  // namespace ppmp
