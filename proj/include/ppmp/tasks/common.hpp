#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>

#include "ppmp/coupling.hpp"
#include "ppmp/kinematics.hpp"
#include "ppmp/phase.hpp"
#include "ppmp/portrait.hpp"

namespace ppmp {

struct CostSpec {
  double v1 = 10.0;
  double v2 = 5.0;
  double v3 = -20.0;
  double y_goal = 3.0;
  double penalty_on_failure = 1e3;

  void validate() const;
};

// c = v1 sum(qdd^2) + v2 |y_goal - y_ball| + v3 (|y_left - y_ball| + |y_right - y_ball|) / 2
double instantaneous_cost(double y_ball, double y_left, double y_right, std::span<const double> qdd,
                          const CostSpec& spec);

// Mean of the per-tick costs. Throws ConfigError on an empty sequence.
double rollout_cost(std::span<const double> costs);

// Minimum-jerk interpolation from a to b over [0, duration]; constant outside.
double minimum_jerk(double a, double b, double duration, double t);
double minimum_jerk_velocity(double a, double b, double duration, double t);

// Closed-loop PPMP pipeline: observed target -> target phase -> coupling ->
// robot phase -> portrait step -> conditioned joints.
class PpmpController {
 public:
  PpmpController(const PhasePortrait& portrait, CouplingPolicy policy, double smoothing = 0.5,
                 double omega = 0.0);

  // Feeds one target observation taken dt after the previous one.
  void observe(const Eigen::VectorXd& x, double dt);
  // Advances the oscillator by dt and returns the conditioned joint command.
  const Eigen::VectorXd& advance(double dt);
  void advance_phase(double dt);
  // Joint command at the current robot phase without advancing.
  const Eigen::VectorXd& command();

  void reset();
  // Places the robot phase; by default it starts at the first target phase.
  void set_robot_phase(PhaseAngle phi);
  // Replaces the policy output with a fixed coupling (nullopt restores it).
  void override_coupling(std::optional<Coupling> c) { override_ = c; }
  // Re-seeds the target velocity estimate, e.g. after a drag is released.
  void seed_target(double y, double y_dot) { tracker_.seed(y, y_dot); }

  [[nodiscard]] PhaseAngle phi_target() const { return phi_target_; }
  [[nodiscard]] PhaseAngle phi_robot() const { return osc_.phi_robot; }
  [[nodiscard]] Coupling coupling() const { return coupling_; }
  [[nodiscard]] const OscillatorState& oscillator() const { return osc_; }
  [[nodiscard]] const PhasePortrait& portrait() const { return *portrait_; }
  [[nodiscard]] const CouplingPolicy& policy() const { return policy_; }

 private:
  void refresh_coupling();

  const PhasePortrait* portrait_;
  CouplingPolicy policy_;
  PhaseTracker tracker_;
  OscillatorState osc_;
  std::optional<Coupling> override_;
  Coupling coupling_;
  PhaseAngle phi_target_;
  Eigen::VectorXd x_obs_;
  Eigen::VectorXd q_cmd_;
  bool robot_phase_set_ = false;
};

// Elbows-down pose with both hands near the chest; IK warm start.
Eigen::VectorXd resting_pose(const DualArm& arm);

// Robot phase replayed open loop: q_t = conditioned mean at lookup(phases[t])
// given targets.row(t). Returns a T x d_q matrix.
Eigen::MatrixXd run_open_loop(const PhasePortrait& portrait, std::span<const double> phases,
                              const Eigen::MatrixXd& targets);

}  // namespace ppmp
