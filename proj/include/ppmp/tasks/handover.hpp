#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

#include "ppmp/coupling.hpp"
#include "ppmp/kinematics.hpp"
#include "ppmp/portrait.hpp"
#include "ppmp/tasks/common.hpp"

namespace ppmp {

// Partner hand approaches along y (towards the robot) while the robot brings
// both hands forward to receive the object. The target is the partner hand
// [lateral, y]; robot hands are at (-+hand_lateral + partner lateral, y).
struct HandoverParams {
  double giver_start_y = 1.2;
  double giver_end_y = 0.62;
  double giver_lateral = 0.0;
  double hand_home_y = 0.25;
  double hand_reach_y = 0.52;
  double hand_lateral = 0.1;
  // Time at which the receiver phase reaches the end of the stroke.
  double empty_settle = 1.5;
  double full_settle = 2.0;
  // Giver stroke duration as a fraction of the receiver stroke duration.
  double giver_ratio = 0.8;
  // Receiver phase counts as arrived within this distance of pi.
  double arrival_tolerance = 0.05;
  double horizon = 3.0;
  double demo_dt = 0.01;
  // Relative jitter of the settle time and lateral jitter (m) of jittered demos.
  double settle_jitter = 0.05;
  double lateral_jitter = 0.02;
  double dt = 1.0 / 30.0;
  int substeps = 33;
  double actuator_lag = 0.0;

  void validate() const;
};

// Fraction s of a minimum-jerk stroke after which its own phase-plane angle
// is within `tolerance` of pi.
double min_jerk_arrival_fraction(double tolerance);

// Receiver stroke duration that makes the receiver phase arrive at `settle`.
double receiver_duration(const HandoverParams& params, double settle);

struct HandoverDemo {
  Demonstration demo;  // q: arm joints, x: partner hand [lateral, y]
  double dt = 0.01;
  double receiver_duration = 0.0;
  double giver_duration = 0.0;
};

HandoverDemo synth_handover_demo(const HandoverParams& params, const DualArm& arm, double settle,
                                 double lateral_offset = 0.0);

// Index 0 is nominal; the rest jitter settle time and partner lateral offset.
DemonstrationSet synth_handover_demos(const HandoverParams& params, const DualArm& arm, double settle,
                                      int count, std::uint64_t seed);

// Map from partner offsets [lateral, y] to hand offsets [xl, yl, xr, yr]:
// hands follow the partner laterally only.
Eigen::MatrixXd handover_effector_gain();

// Partner hand position at time t for a giver stroke of the given duration.
Eigen::Vector2d giver_position(const HandoverParams& params, double giver_duration, double t,
                               double lateral_offset = 0.0);

struct HandoverRow {
  double t;
  double phi_target;
  double phi_robot;
  double stiffness;
  double shift;
  Eigen::Vector2d target;
  Eigen::Vector4d hands;
  Eigen::VectorXd q;
};

struct HandoverRun {
  std::vector<HandoverRow> rows;
  // First time the mean robot hand y covers 95% of its final displacement.
  double time_to_95 = 0.0;
  double final_phase = 0.0;
};

// Receiver stepped one control tick at a time against a partner position.
// Joint commands are interpolated across substeps; the actuator follows
// through a first-order lag.
class HandoverSession {
 public:
  HandoverSession(const HandoverParams& params, const DualArm& arm, const PhasePortrait& portrait,
                  const CouplingPolicy& policy, const Eigen::Vector2d& partner, double smoothing = 0.5);

  // Advances one tick; the partner position is observed at its end. When
  // `hand_y` is given, the mean hand y after every substep is appended.
  void tick(const Eigen::Vector2d& partner, std::vector<double>* hand_y = nullptr);

  [[nodiscard]] double time() const { return t_; }
  [[nodiscard]] const Eigen::VectorXd& q() const { return q_; }
  [[nodiscard]] Eigen::Vector4d hands() const { return arm_.forward(q_); }
  [[nodiscard]] PpmpController& controller() { return ctrl_; }
  [[nodiscard]] const PpmpController& controller() const { return ctrl_; }
  [[nodiscard]] const HandoverParams& params() const { return params_; }

 private:
  HandoverParams params_;
  DualArm arm_;
  PpmpController ctrl_;
  Eigen::VectorXd q_;
  Eigen::VectorXd q_start_;
  double t_ = 0.0;
};

// Closed loop with the receiver portrait against a minimum-jerk partner.
HandoverRun run_handover(const HandoverParams& params, const DualArm& arm, const PhasePortrait& portrait,
                         const CouplingPolicy& policy, double giver_duration, double smoothing = 0.5);

// Time at which |y(t) - y(0)| first reaches `fraction` of |y(end) - y(0)|.
double time_to_fraction(std::span<const double> t, std::span<const double> y, double fraction);

// Giver role: the portrait is indexed by a recorded phase sequence while the
// pose is conditioned on the live partner positions (one row per phase).
struct GiverRun {
  Eigen::MatrixXd q;
  Eigen::MatrixXd hands;
};
GiverRun run_handover_giver(const DualArm& arm, const PhasePortrait& portrait, std::span<const double> phases,
                            const Eigen::MatrixXd& partner);

}  // namespace ppmp
