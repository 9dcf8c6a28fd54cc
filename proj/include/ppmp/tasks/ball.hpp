#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "ppmp/coupling.hpp"
#include "ppmp/kinematics.hpp"
#include "ppmp/policy_search.hpp"
#include "ppmp/portrait.hpp"
#include "ppmp/tasks/common.hpp"

namespace ppmp {

// Ball on a string in front of the robot. Only the motion along the progress
// axis (y, away from the chest) is simulated: y = rest_y + L sin(theta).
struct BallParams {
  double string_length = 1.5;
  double rest_y = 0.45;
  double gravity = 9.81;
  double damping = 0.05;  // 1/s
  double radius = 0.1;
  double chest_y = 0.05;
  // Hands further than this from the ball laterally do not touch it.
  double contact_width = 0.25;
  double start_y = 1.05;
  // Start position is drawn uniformly from start_y +- start_jitter.
  double start_jitter = 0.0;
  double dt = 1.0 / 30.0;
  int substeps = 33;
  // First-order joint tracking time constant; 0 tracks commands exactly.
  double actuator_lag = 0.0;
  // Joint speed limit of the actuators, rad/s.
  double max_joint_speed = 11.0;
  double duration = 30.0;

  [[nodiscard]] double substep_dt() const { return dt / substeps; }
  void validate() const;
};

class BallWorld {
 public:
  BallWorld(const BallParams& params, DualArm arm, const Eigen::VectorXd& q0, std::uint64_t seed = 0);

  // One physics substep with the arm commanded to q_cmd.
  void substep(const Eigen::VectorXd& q_cmd);
  // One physics substep with hand positions [xl, yl, xr, yr] set directly.
  void substep_hands(const Eigen::Vector4d& hands);

  [[nodiscard]] double y() const { return y_; }
  [[nodiscard]] double v() const { return v_; }
  [[nodiscard]] double x_lateral() const { return x_; }
  [[nodiscard]] Eigen::Vector2d target() const { return {x_, y_}; }
  [[nodiscard]] const Eigen::Vector4d& hands() const { return hands_; }
  [[nodiscard]] const Eigen::VectorXd& q() const { return q_; }
  [[nodiscard]] double time() const { return t_; }
  [[nodiscard]] bool in_contact() const { return contact_; }
  // True for the substep in which the ball struck the chest.
  [[nodiscard]] bool chest_hit() const { return chest_hit_; }
  [[nodiscard]] int chest_hits() const { return chest_hits_; }
  // Pendulum energy per unit mass, zero at rest.
  [[nodiscard]] double energy() const;
  [[nodiscard]] const BallParams& params() const { return p_; }
  [[nodiscard]] const DualArm& arm() const { return arm_; }

  // While grabbed the ball follows move_to() and ignores dynamics.
  void grab() { grabbed_ = true; }
  void move_to(double x, double y);
  void release(double vy);
  [[nodiscard]] bool grabbed() const { return grabbed_; }

 private:
  void advance(const Eigen::Vector4d& hands);
  void set_from_y(double y, double v);

  BallParams p_;
  DualArm arm_;
  Eigen::VectorXd q_;
  Eigen::Vector4d hands_;
  double theta_ = 0.0;
  double omega_ = 0.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double v_ = 0.0;
  double t_ = 0.0;
  bool contact_ = false;
  bool chest_hit_ = false;
  int chest_hits_ = 0;
  bool grabbed_ = false;
};

// Pushes are contact episodes after which the ball leaves outward. A push
// succeeds when the following peak exceeds rest_y + success_excursion; a failed
// push or a chest hit breaks the streak.
class PushCounter {
 public:
  PushCounter(double rest_y, double success_excursion, double min_release_speed = 0.2);
  void update(double y, double v, bool contact, bool chest_hit);

  [[nodiscard]] int pushes() const { return pushes_; }
  [[nodiscard]] int successful() const { return successful_; }
  [[nodiscard]] int best_streak() const { return best_; }
  [[nodiscard]] const std::vector<double>& peaks() const { return peaks_; }

 private:
  void finalize();

  double rest_;
  double excursion_;
  double min_speed_;
  bool in_contact_ = false;
  bool pending_ = false;
  double peak_ = 0.0;
  int pushes_ = 0;
  int successful_ = 0;
  int streak_ = 0;
  int best_ = 0;
  std::vector<double> peaks_;
};

struct TrajectoryRow {
  double t;
  double phi_target;
  double phi_robot;
  double stiffness;
  double shift;
  double y_ball;
  double y_left;
  double y_right;
  Eigen::VectorXd q;
  double cost;
};

struct BallRunOptions {
  CostSpec cost;
  // Peak excursion above rest that counts as a successful push.
  double success_excursion = 0.3;
  std::uint64_t seed = 0;
  bool record = false;
  double smoothing = 0.5;
};

struct BallRollout {
  double cost = 0.0;
  bool failed = false;
  int pushes = 0;
  int successful_pushes = 0;
  int best_streak = 0;
  int chest_hits = 0;
  double max_y = 0.0;
  std::vector<TrajectoryRow> trajectory;
};

// Closed-loop session stepped one control tick at a time. Joint commands are
// taken at the tick and interpolated linearly across the physics substeps,
// the oscillator runs per substep.
class BallSession {
 public:
  BallSession(const BallParams& params, const DualArm& arm, const PhasePortrait& portrait,
              const CouplingPolicy& policy, const BallRunOptions& options);

  // Advances one control tick and returns its cost.
  double tick();
  [[nodiscard]] TrajectoryRow row() const;

  [[nodiscard]] BallWorld& world() { return world_; }
  [[nodiscard]] const BallWorld& world() const { return world_; }
  [[nodiscard]] PpmpController& controller() { return ctrl_; }
  [[nodiscard]] const PpmpController& controller() const { return ctrl_; }
  [[nodiscard]] const PushCounter& counter() const { return counter_; }
  [[nodiscard]] long ticks() const { return ticks_; }
  [[nodiscard]] double last_cost() const { return last_cost_; }
  [[nodiscard]] double cost_sum() const { return sum_; }
  [[nodiscard]] double max_y() const { return max_y_; }

 private:
  BallParams params_;
  BallRunOptions options_;
  PpmpController ctrl_;
  BallWorld world_;
  PushCounter counter_;
  Eigen::VectorXd q_start_;
  Eigen::VectorXd q_sub_;
  Eigen::VectorXd q_prev_;
  Eigen::VectorXd q_prev2_;
  Eigen::VectorXd qdd_;
  long ticks_ = 0;
  double last_cost_ = 0.0;
  double sum_ = 0.0;
  double max_y_ = 0.0;
};

BallRollout run_ball(const BallParams& params, const DualArm& arm, const PhasePortrait& portrait,
                     const CouplingPolicy& policy, const BallRunOptions& options);

// Roll-out interface for policy search over [w_K; w_alpha].
class BallTask final : public EpisodicTask {
 public:
  BallTask(BallParams params, DualArm arm, const PhasePortrait& portrait, RbfBasis basis,
           BallRunOptions options)
      : params_(params), arm_(std::move(arm)), portrait_(&portrait), basis_(std::move(basis)),
        options_(options) {}
  [[nodiscard]] double rollout(const Eigen::VectorXd& weights) const override;

 private:
  BallParams params_;
  DualArm arm_;
  const PhasePortrait* portrait_;
  RbfBasis basis_;
  BallRunOptions options_;
};

// Scripted demonstrator: hands wait extended, retract with the incoming ball,
// then push it out with a minimum-jerk stroke.
struct BallExpert {
  double hand_extended = 0.6;
  double hand_retracted = 0.2;
  double hand_lateral = 0.1;
  double push_duration = 0.4;
};

struct BallDemo {
  Demonstration demo;  // q: arm joints, x: [ball lateral, ball y]
  double dt = 0.01;
  std::vector<double> hand_y;
};

// Runs the expert in the simulator until the cycle settles and returns one
// cycle from catch to catch, sampled at `dt`.
BallDemo synth_ball_demo(const BallParams& params, const DualArm& arm, const BallExpert& expert,
                         double dt = 0.01);

// N demonstrations: index 0 is the nominal expert, the rest use expert
// parameters jittered under `seed`; every cycle is resampled to the nominal
// length.
DemonstrationSet synth_ball_demos(const BallParams& params, const DualArm& arm, const BallExpert& expert,
                                  int count, std::uint64_t seed, double dt = 0.01);

// Map from ball offsets [lateral, y] to hand offsets: lateral shifts only.
Eigen::MatrixXd ball_effector_gain();

}  // namespace ppmp
