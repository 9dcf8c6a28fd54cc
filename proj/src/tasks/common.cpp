#include "ppmp/tasks/common.hpp"

#include <cmath>

#include "ppmp/error.hpp"

namespace ppmp {

void CostSpec::validate() const {
  if (!std::isfinite(v1) || !std::isfinite(v2) || !std::isfinite(v3) || !std::isfinite(y_goal) ||
      !std::isfinite(penalty_on_failure)) {
    throw ConfigError("cost weights must be finite");
  }
}

double instantaneous_cost(double y_ball, double y_left, double y_right, std::span<const double> qdd,
                          const CostSpec& spec) {
  double acc = 0.0;
  for (double a : qdd) acc += a * a;
  return spec.v1 * acc + spec.v2 * std::fabs(spec.y_goal - y_ball) +
         spec.v3 * (0.5 * std::fabs(y_left - y_ball) + 0.5 * std::fabs(y_right - y_ball));
}

double rollout_cost(std::span<const double> costs) {
  if (costs.empty()) throw ConfigError("rollout_cost: no steps");
  double s = 0.0;
  for (double c : costs) s += c;
  return s / static_cast<double>(costs.size());
}

double minimum_jerk(double a, double b, double duration, double t) {
  if (t <= 0.0) return a;
  if (t >= duration) return b;
  const double s = t / duration;
  return a + (b - a) * s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double minimum_jerk_velocity(double a, double b, double duration, double t) {
  if (t <= 0.0 || t >= duration) return 0.0;
  const double s = t / duration;
  return (b - a) / duration * 30.0 * s * s * (1.0 - s) * (1.0 - s);
}

PpmpController::PpmpController(const PhasePortrait& portrait, CouplingPolicy policy, double smoothing,
                               double omega)
    : portrait_(&portrait),
      policy_(std::move(policy)),
      tracker_(portrait.target_plane(), portrait.mode(), smoothing),
      x_obs_(portrait.steps().front().mu_x()),
      q_cmd_(portrait.d_q()) {
  policy_.basis.validate();
  policy_.weights.validate(policy_.basis.size());
  if (policy_.basis.range != portrait.mode()) {
    throw ConfigError("coupling basis range does not match the portrait mode");
  }
  osc_.mode = portrait.mode();
  osc_.omega = omega;
  refresh_coupling();
}

void PpmpController::refresh_coupling() {
  coupling_ = override_ ? *override_ : eval_coupling(policy_.basis, policy_.weights, phi_target_);
}

void PpmpController::observe(const Eigen::VectorXd& x, double dt) {
  if (x.size() != portrait_->d_x()) throw ConfigError("observation has wrong dimension");
  if (!x.allFinite()) throw NumericError("non-finite target observation");
  x_obs_ = x;
  phi_target_ = tracker_.update(x[portrait_->target_progress_dim()], dt);
  if (!robot_phase_set_) {
    osc_.phi_robot = phi_target_;
    robot_phase_set_ = true;
  }
  refresh_coupling();
}

void PpmpController::advance_phase(double dt) {
  refresh_coupling();
  osc_ = step_oscillator(osc_, phi_target_, coupling_, dt);
}

const Eigen::VectorXd& PpmpController::advance(double dt) {
  advance_phase(dt);
  return command();
}

const Eigen::VectorXd& PpmpController::command() {
  const std::size_t step = portrait_->lookup_index(osc_.phi_robot);
  portrait_->conditioned_mean(step, {x_obs_.data(), static_cast<std::size_t>(x_obs_.size())},
                              {q_cmd_.data(), static_cast<std::size_t>(q_cmd_.size())});
  return q_cmd_;
}

void PpmpController::reset() {
  tracker_.reset();
  const auto mode = osc_.mode;
  const double omega = osc_.omega;
  osc_ = OscillatorState{};
  osc_.mode = mode;
  osc_.omega = omega;
  phi_target_ = PhaseAngle{};
  x_obs_ = portrait_->steps().front().mu_x();
  robot_phase_set_ = false;
  refresh_coupling();
}

void PpmpController::set_robot_phase(PhaseAngle phi) {
  double r = phi.radians();
  if (osc_.mode == PhaseMode::single_stroke) r = clamp_single_stroke(r);
  osc_.phi_robot = PhaseAngle(r);
  robot_phase_set_ = true;
}

Eigen::VectorXd resting_pose(const DualArm& arm) {
  Eigen::VectorXd q = Eigen::VectorXd::Zero(arm.dof());
  const int n = arm.left().dof();
  for (int j = 0; j < n; ++j) {
    const double v = j == 0 ? 0.9 : (j == 1 ? -1.6 : 0.4);
    q[1 + j] = v;
    q[1 + n + j] = -v;
  }
  return q;
}

Eigen::MatrixXd run_open_loop(const PhasePortrait& portrait, std::span<const double> phases,
                              const Eigen::MatrixXd& targets) {
  if (phases.empty()) throw ConfigError("open-loop replay needs at least one phase");
  if (targets.rows() != static_cast<Eigen::Index>(phases.size()) || targets.cols() != portrait.d_x()) {
    throw ConfigError("open-loop replay: targets must be " + std::to_string(phases.size()) + " x " +
                      std::to_string(portrait.d_x()));
  }
  Eigen::MatrixXd q(targets.rows(), portrait.d_q());
  Eigen::VectorXd x(portrait.d_x());
  Eigen::VectorXd out(portrait.d_q());
  for (Eigen::Index t = 0; t < targets.rows(); ++t) {
    x = targets.row(t).transpose();
    portrait.conditioned_mean(portrait.lookup_index(PhaseAngle(phases[static_cast<std::size_t>(t)])),
                              {x.data(), static_cast<std::size_t>(x.size())},
                              {out.data(), static_cast<std::size_t>(out.size())});
    q.row(t) = out.transpose();
  }
  return q;
}

}  // namespace ppmp
