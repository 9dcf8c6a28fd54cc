#include "ppmp/tasks/handover.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ppmp/error.hpp"
#include "ppmp/tasks/common.hpp"

namespace ppmp {

void HandoverParams::validate() const {
  if (!(giver_start_y > giver_end_y)) throw ConfigError("handover: giver must approach (start_y > end_y)");
  if (!(hand_reach_y > hand_home_y)) throw ConfigError("handover: hands must reach forward");
  if (!(empty_settle > 0.0) || !(full_settle > 0.0)) throw ConfigError("handover: settle times must be positive");
  if (!(giver_ratio > 0.0)) throw ConfigError("handover: giver_ratio must be positive");
  if (!(arrival_tolerance > 0.0 && arrival_tolerance < kPi / 2)) {
    throw ConfigError("handover: arrival_tolerance must lie in (0, pi/2)");
  }
  if (!(demo_dt > 0.0) || !(dt > 0.0) || substeps < 1) throw ConfigError("handover: bad time step");
  if (!(actuator_lag >= 0.0)) throw ConfigError("handover: actuator_lag must be >= 0");
  if (!(settle_jitter >= 0.0 && settle_jitter < 1.0) || !(lateral_jitter >= 0.0)) {
    throw ConfigError("handover: jitter out of range");
  }
  if (!(horizon >= std::max(empty_settle, full_settle) / min_jerk_arrival_fraction(arrival_tolerance))) {
    throw ConfigError("handover: horizon shorter than the slowest receiver stroke");
  }
}

double min_jerk_arrival_fraction(double tolerance) {
  // Same normalization as the fitted plane: half range and half velocity span.
  const PlaneNormalization norm{0.5, 0.5, 0.5 * minimum_jerk_velocity(0.0, 1.0, 1.0, 0.5), -1.0};
  const int n = 100000;
  for (int i = 1; i <= n; ++i) {
    const double s = static_cast<double>(i) / n;
    const double phi =
        phase_from_plane({minimum_jerk(0.0, 1.0, 1.0, s), minimum_jerk_velocity(0.0, 1.0, 1.0, s), norm})
            .phase.radians();
    if (std::fabs(phi) >= kPi - tolerance) return s;
  }
  return 1.0;
}

double receiver_duration(const HandoverParams& params, double settle) {
  return settle / min_jerk_arrival_fraction(params.arrival_tolerance);
}

Eigen::Vector2d giver_position(const HandoverParams& params, double giver_duration, double t,
                               double lateral_offset) {
  return {params.giver_lateral + lateral_offset,
          minimum_jerk(params.giver_start_y, params.giver_end_y, giver_duration, t)};
}

Eigen::MatrixXd handover_effector_gain() {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 2);
  g(0, 0) = g(2, 0) = 1.0;
  return g;
}

HandoverDemo synth_handover_demo(const HandoverParams& params, const DualArm& arm, double settle,
                                 double lateral_offset) {
  params.validate();
  if (!(settle > 0.0)) throw ConfigError("handover demo: settle must be positive");
  HandoverDemo out;
  out.dt = params.demo_dt;
  out.receiver_duration = receiver_duration(params, settle);
  out.giver_duration = params.giver_ratio * out.receiver_duration;
  const auto T = static_cast<Eigen::Index>(std::lround(params.horizon / params.demo_dt)) + 1;
  out.demo.q.resize(T, arm.dof());
  out.demo.x.resize(T, 2);
  Eigen::VectorXd guess = resting_pose(arm);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double time = static_cast<double>(t) * params.demo_dt;
    const Eigen::Vector2d giver = giver_position(params, out.giver_duration, time, lateral_offset);
    const double y = minimum_jerk(params.hand_home_y, params.hand_reach_y, out.receiver_duration, time);
    const double cx = params.giver_lateral + lateral_offset;
    Eigen::VectorXd hands(4);
    hands << cx - params.hand_lateral, y, cx + params.hand_lateral, y;
    guess = inverse(arm, hands, guess).q;
    out.demo.q.row(t) = guess.transpose();
    out.demo.x.row(t) = giver.transpose();
  }
  return out;
}

DemonstrationSet synth_handover_demos(const HandoverParams& params, const DualArm& arm, double settle,
                                      int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("handover demos: count must be >= 1");
  DemonstrationSet set;
  set.dt = params.demo_dt;
  set.demos.push_back(synth_handover_demo(params, arm, settle).demo);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 1; n < count; ++n) {
    const double s = settle * (1.0 + params.settle_jitter * u(rng));
    const double lateral = params.lateral_jitter * u(rng);
    set.demos.push_back(synth_handover_demo(params, arm, s, lateral).demo);
  }
  set.validate();
  return set;
}

double time_to_fraction(std::span<const double> t, std::span<const double> y, double fraction) {
  if (t.empty() || t.size() != y.size()) throw ConfigError("time_to_fraction: size mismatch");
  const double total = std::fabs(y.back() - y.front());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (std::fabs(y[i] - y.front()) >= fraction * total) return t[i];
  }
  return t.back();
}

namespace {

void check_handover_setup(const HandoverParams& params, const DualArm& arm, const PhasePortrait& portrait) {
  params.validate();
  if (portrait.mode() != PhaseMode::single_stroke) throw ConfigError("handover needs a single-stroke portrait");
  if (portrait.d_q() != arm.dof() || portrait.d_x() != 2) {
    throw ConfigError("handover needs a portrait over the arm joints and a 2-D partner target");
  }
}

}  // namespace

HandoverSession::HandoverSession(const HandoverParams& params, const DualArm& arm, const PhasePortrait& portrait,
                                 const CouplingPolicy& policy, const Eigen::Vector2d& partner, double smoothing)
    : params_((check_handover_setup(params, arm, portrait), params)),
      arm_(arm),
      ctrl_(portrait, policy, smoothing) {
  ctrl_.observe(partner, params_.dt);
  ctrl_.set_robot_phase(PhaseAngle(0.0));
  q_ = ctrl_.command();
  q_start_ = q_;
}

void HandoverSession::tick(const Eigen::Vector2d& partner, std::vector<double>* hand_y) {
  const Eigen::VectorXd q_goal = ctrl_.command();
  const double h = params_.dt / params_.substeps;
  const double gain = params_.actuator_lag > 0.0 ? 1.0 - std::exp(-h / params_.actuator_lag) : 1.0;
  for (int s = 0; s < params_.substeps; ++s) {
    ctrl_.advance_phase(h);
    const double f = static_cast<double>(s + 1) / params_.substeps;
    q_ += gain * (q_start_ + f * (q_goal - q_start_) - q_);
    if (hand_y) {
      const Eigen::Vector4d hands = arm_.forward(q_);
      hand_y->push_back(0.5 * (hands[1] + hands[3]));
    }
  }
  q_start_ = q_goal;
  t_ += params_.dt;
  ctrl_.observe(partner, params_.dt);
}

HandoverRun run_handover(const HandoverParams& params, const DualArm& arm, const PhasePortrait& portrait,
                         const CouplingPolicy& policy, double giver_duration, double smoothing) {
  HandoverSession session(params, arm, portrait, policy, giver_position(params, giver_duration, 0.0), smoothing);
  const auto ticks = static_cast<int>(std::lround(params.horizon / params.dt));
  HandoverRun out;
  auto record = [&]() {
    const PpmpController& c = session.controller();
    const Coupling cp = c.coupling();
    out.rows.push_back({session.time(), c.phi_target().radians(), c.phi_robot().radians(), cp.stiffness,
                        cp.shift, giver_position(params, giver_duration, session.time()), session.hands(),
                        session.q()});
  };
  // Hand displacement is sampled every substep.
  std::vector<double> hand_y{0.5 * (session.hands()[1] + session.hands()[3])};
  record();
  for (int k = 1; k <= ticks; ++k) {
    session.tick(giver_position(params, giver_duration, k * params.dt), &hand_y);
    record();
  }
  std::vector<double> times(hand_y.size());
  const double h = params.dt / params.substeps;
  for (std::size_t i = 0; i < times.size(); ++i) times[i] = static_cast<double>(i) * h;
  out.time_to_95 = time_to_fraction(times, hand_y, 0.95);
  out.final_phase = session.controller().phi_robot().radians();
  return out;
}

GiverRun run_handover_giver(const DualArm& arm, const PhasePortrait& portrait, std::span<const double> phases,
                            const Eigen::MatrixXd& partner) {
  GiverRun out;
  out.q = run_open_loop(portrait, phases, partner);
  out.hands.resize(out.q.rows(), arm.effector_dim());
  for (Eigen::Index t = 0; t < out.q.rows(); ++t) {
    out.hands.row(t) = arm.forward(out.q.row(t).transpose()).transpose();
  }
  return out;
}

}  // namespace ppmp
