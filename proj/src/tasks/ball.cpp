#include "ppmp/tasks/ball.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ppmp/error.hpp"

namespace ppmp {

void BallParams::validate() const {
  if (!(string_length > 0.0)) throw ConfigError("ball: string_length must be positive");
  if (!(gravity > 0.0)) throw ConfigError("ball: gravity must be positive");
  if (!(damping >= 0.0)) throw ConfigError("ball: damping must be >= 0");
  if (!(radius > 0.0)) throw ConfigError("ball: radius must be positive");
  if (!(dt > 0.0)) throw ConfigError("ball: dt must be positive");
  if (substeps < 1) throw ConfigError("ball: substeps must be >= 1");
  if (!(actuator_lag >= 0.0)) throw ConfigError("ball: actuator_lag must be >= 0");
  if (!(duration > 0.0)) throw ConfigError("ball: duration must be positive");
  if (!(max_joint_speed > 0.0)) throw ConfigError("ball: max_joint_speed must be positive");
  if (!(start_jitter >= 0.0)) throw ConfigError("ball: start_jitter must be >= 0");
  if (std::fabs(start_y - rest_y) + start_jitter >= string_length) {
    throw ConfigError("ball: start position is outside the string length");
  }
}

BallWorld::BallWorld(const BallParams& params, DualArm arm, const Eigen::VectorXd& q0,
                     std::uint64_t seed)
    : p_(params), arm_(std::move(arm)), q_(q0) {
  p_.validate();
  if (q0.size() != arm_.dof()) throw ConfigError("ball: initial joint vector has wrong size");
  hands_ = arm_.forward(q_);
  double y0 = p_.start_y;
  if (p_.start_jitter > 0.0) {
    std::mt19937_64 rng(seed);
    y0 += std::uniform_real_distribution<double>(-p_.start_jitter, p_.start_jitter)(rng);
  }
  set_from_y(y0, 0.0);
}

void BallWorld::set_from_y(double y, double v) {
  const double s = std::clamp((y - p_.rest_y) / p_.string_length, -0.999, 0.999);
  theta_ = std::asin(s);
  omega_ = v / (p_.string_length * std::cos(theta_));
  y_ = p_.rest_y + p_.string_length * s;
  v_ = v;
}

double BallWorld::energy() const {
  return 0.5 * v_ * v_ + p_.gravity * p_.string_length * (1.0 - std::cos(theta_));
}

void BallWorld::substep(const Eigen::VectorXd& q_cmd) {
  if (q_cmd.size() != arm_.dof()) throw ConfigError("ball: joint command has wrong size");
  Eigen::VectorXd dq = q_cmd - q_;
  if (p_.actuator_lag > 0.0) dq *= 1.0 - std::exp(-p_.substep_dt() / p_.actuator_lag);
  const double max_step = p_.max_joint_speed * p_.substep_dt();
  const double largest = dq.cwiseAbs().maxCoeff();
  if (largest > max_step) dq *= max_step / largest;
  q_ += dq;
  advance(arm_.forward(q_));
}

void BallWorld::substep_hands(const Eigen::Vector4d& hands) { advance(hands); }

void BallWorld::advance(const Eigen::Vector4d& hands) {
  const double h = p_.substep_dt();
  const Eigen::Vector4d prev = hands_;
  hands_ = hands;
  t_ += h;
  contact_ = false;
  chest_hit_ = false;
  if (grabbed_) return;

  omega_ += h * (-(p_.gravity / p_.string_length) * std::sin(theta_) - p_.damping * omega_);
  theta_ += h * omega_;
  double y = p_.rest_y + p_.string_length * std::sin(theta_);
  double v = p_.string_length * std::cos(theta_) * omega_;

  double y_new = y;
  double v_new = v;
  for (int side = 0; side < 2; ++side) {
    const double xh = hands_[2 * side];
    const double yh = hands_[2 * side + 1];
    const double vh = (yh - prev[2 * side + 1]) / h;
    if (std::fabs(xh - x_) > p_.contact_width) continue;
    if (yh >= y - p_.radius && vh > v) {
      contact_ = true;
      y_new = std::max(y_new, yh + p_.radius);
      v_new = std::max(v_new, vh);
    }
  }
  if (y_new - p_.radius <= p_.chest_y && v_new < 0.0) {
    if (v_new < -0.05) {
      chest_hit_ = true;
      ++chest_hits_;
    }
    y_new = p_.chest_y + p_.radius;
    v_new = 0.0;
  }
  if (contact_ || chest_hit_ || y_new != y) {
    set_from_y(y_new, v_new);
  } else {
    y_ = y;
    v_ = v;
  }
  if (!std::isfinite(y_) || !std::isfinite(v_)) throw NumericError("ball state became non-finite");
}

void BallWorld::move_to(double x, double y) {
  x_ = x;
  set_from_y(y, 0.0);
}

void BallWorld::release(double vy) {
  grabbed_ = false;
  set_from_y(y_, vy);
}

PushCounter::PushCounter(double rest_y, double success_excursion, double min_release_speed)
    : rest_(rest_y), excursion_(success_excursion), min_speed_(min_release_speed) {}

void PushCounter::finalize() {
  pending_ = false;
  ++pushes_;
  peaks_.push_back(peak_);
  if (peak_ - rest_ >= excursion_) {
    ++successful_;
    best_ = std::max(best_, ++streak_);
  } else {
    streak_ = 0;
  }
}

void PushCounter::update(double y, double v, bool contact, bool chest_hit) {
  if (chest_hit) {
    if (pending_) finalize();
    streak_ = 0;
  }
  if (contact) {
    in_contact_ = true;
    return;
  }
  if (in_contact_) {
    in_contact_ = false;
    if (v > min_speed_) {
      if (!pending_) peak_ = y;
      pending_ = true;
    }
  }
  if (pending_) {
    peak_ = std::max(peak_, y);
    if (v <= 0.0) finalize();
  }
}

namespace {

void check_ball_setup(const BallParams& params, const DualArm& arm, const PhasePortrait& portrait,
                      const BallRunOptions& options) {
  params.validate();
  options.cost.validate();
  if (portrait.mode() != PhaseMode::cyclic) throw ConfigError("ball task needs a cyclic portrait");
  if (portrait.d_q() != arm.dof() || portrait.d_x() != 2) {
    throw ConfigError("ball task needs a portrait over the arm joints and a 2-D ball target");
  }
}

BallWorld initial_world(const BallParams& params, const DualArm& arm, const PhasePortrait& portrait,
                        PpmpController& ctrl, std::uint64_t seed) {
  BallWorld probe(params, arm, portrait.steps().front().mu_q(), seed);
  ctrl.observe(probe.target(), params.dt);
  return BallWorld(params, arm, ctrl.command(), seed);
}

}  // namespace

BallSession::BallSession(const BallParams& params, const DualArm& arm, const PhasePortrait& portrait,
                         const CouplingPolicy& policy, const BallRunOptions& options)
    : params_((check_ball_setup(params, arm, portrait, options), params)),
      options_(options),
      ctrl_(portrait, policy, options.smoothing),
      world_(initial_world(params, arm, portrait, ctrl_, options.seed)),
      counter_(params.rest_y, options.success_excursion),
      q_start_(world_.q()),
      q_sub_(q_start_),
      q_prev_(q_start_),
      q_prev2_(q_start_),
      qdd_(q_start_.size()),
      max_y_(world_.y()) {}

double BallSession::tick() {
  const double h = params_.substep_dt();
  const Eigen::VectorXd q_goal = ctrl_.command();
  const double inv = 1.0 / params_.substeps;
  for (int s = 0; s < params_.substeps; ++s) {
    ctrl_.advance_phase(h);
    q_sub_ = q_start_ + (static_cast<double>(s + 1) * inv) * (q_goal - q_start_);
    world_.substep(q_sub_);
    counter_.update(world_.y(), world_.v(), world_.in_contact(), world_.chest_hit());
    max_y_ = std::max(max_y_, world_.y());
  }
  q_start_ = q_goal;
  ctrl_.observe(world_.target(), params_.dt);
  qdd_ = q_goal - 2.0 * q_prev_ + q_prev2_;
  q_prev2_ = q_prev_;
  q_prev_ = q_goal;
  const Eigen::Vector4d& hands = world_.hands();
  last_cost_ = instantaneous_cost(world_.y(), hands[1], hands[3],
                                  {qdd_.data(), static_cast<std::size_t>(qdd_.size())}, options_.cost);
  if (!std::isfinite(last_cost_)) throw NumericError("ball tick cost is non-finite");
  sum_ += last_cost_;
  ++ticks_;
  return last_cost_;
}

TrajectoryRow BallSession::row() const {
  const Coupling cp = ctrl_.coupling();
  const Eigen::Vector4d& hands = world_.hands();
  return {world_.time(), ctrl_.phi_target().radians(), ctrl_.phi_robot().radians(), cp.stiffness, cp.shift,
          world_.y(), hands[1], hands[3], world_.q(), last_cost_};
}

BallRollout run_ball(const BallParams& params, const DualArm& arm, const PhasePortrait& portrait,
                     const CouplingPolicy& policy, const BallRunOptions& options) {
  check_ball_setup(params, arm, portrait, options);
  BallRollout out;
  try {
    BallSession session(params, arm, portrait, policy, options);
    const auto ticks = static_cast<int>(std::lround(params.duration / params.dt));
    if (options.record) out.trajectory.reserve(static_cast<std::size_t>(ticks));
    for (int k = 0; k < ticks; ++k) {
      session.tick();
      if (options.record) out.trajectory.push_back(session.row());
    }
    out.cost = session.cost_sum() / ticks;
    out.max_y = session.max_y();
    out.pushes = session.counter().pushes();
    out.successful_pushes = session.counter().successful();
    out.best_streak = session.counter().best_streak();
    out.chest_hits = session.world().chest_hits();
  } catch (const NumericError&) {
    out.failed = true;
    out.cost = options.cost.penalty_on_failure;
  }
  return out;
}

double BallTask::rollout(const Eigen::VectorXd& weights) const {
  const CouplingPolicy policy{basis_, PolicyWeights::from_vector(weights)};
  const BallRollout r = run_ball(params_, arm_, *portrait_, policy, options_);
  return r.failed ? std::numeric_limits<double>::quiet_NaN() : r.cost;
}

Eigen::MatrixXd ball_effector_gain() {
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(4, 2);
  g(0, 0) = 1.0;
  g(2, 0) = 1.0;
  return g;
}

namespace {

enum class ExpertState { wait, catching, pushing };

struct ExpertTrace {
  std::vector<double> hand_y;
  std::vector<double> ball_y;
  std::vector<std::size_t> catches;
};

ExpertTrace run_expert(const BallParams& params, const DualArm& arm, const BallExpert& e, double dt,
                       double duration) {
  BallParams p = params;
  p.dt = dt;
  p.substeps = std::max(1, static_cast<int>(std::lround(dt / 1e-3)));
  p.actuator_lag = 0.0;
  p.start_jitter = 0.0;
  BallWorld world(p, arm, Eigen::VectorXd::Zero(arm.dof()));
  const double h = p.substep_dt();
  const double travel = e.hand_extended - e.hand_retracted;
  if (!(travel > 0.0)) throw ConfigError("ball expert: extended hand must be ahead of retracted hand");

  ExpertState state = ExpertState::wait;
  double hand = e.hand_extended;
  double v0 = 0.0;
  double accel = 0.0;
  double clock = 0.0;
  ExpertTrace trace;
  const auto ticks = static_cast<std::size_t>(std::lround(duration / dt));
  for (std::size_t k = 0; k < ticks; ++k) {
    for (int s = 0; s < p.substeps; ++s) {
      switch (state) {
        case ExpertState::wait:
          if (world.v() < 0.0 && world.y() - p.radius - hand <= -2.0 * world.v() * h) {
            state = ExpertState::catching;
            v0 = world.v();
            accel = v0 * v0 / (2.0 * travel);
            clock = 0.0;
            trace.catches.push_back(k);
          }
          break;
        case ExpertState::catching:
          clock += h;
          if (v0 + accel * clock >= 0.0) {
            hand = e.hand_retracted;
            state = ExpertState::pushing;
            clock = 0.0;
          } else {
            hand = e.hand_extended + v0 * clock + 0.5 * accel * clock * clock;
          }
          break;
        case ExpertState::pushing:
          clock += h;
          hand = minimum_jerk(e.hand_retracted, e.hand_extended, e.push_duration, clock);
          if (clock >= e.push_duration) state = ExpertState::wait;
          break;
      }
      world.substep_hands(Eigen::Vector4d(-e.hand_lateral, hand, e.hand_lateral, hand));
    }
    trace.hand_y.push_back(hand);
    trace.ball_y.push_back(world.y());
  }
  return trace;
}


BallDemo cycle_demo(const ExpertTrace& trace, const DualArm& arm, const BallExpert& e, double dt) {
  if (trace.catches.size() < 4) throw NumericError("ball expert did not settle into a cycle");
  const std::size_t begin = trace.catches[trace.catches.size() - 3];
  const std::size_t end = trace.catches[trace.catches.size() - 2];
  const auto T = static_cast<Eigen::Index>(end - begin);
  BallDemo d;
  d.dt = dt;
  d.demo.q.resize(T, arm.dof());
  d.demo.x.resize(T, 2);
  Eigen::VectorXd guess = resting_pose(arm);
  for (Eigen::Index t = 0; t < T; ++t) {
    const double yh = trace.hand_y[begin + static_cast<std::size_t>(t)];
    const Eigen::Vector4d target(-e.hand_lateral, yh, e.hand_lateral, yh);
    guess = inverse(arm, target, guess).q;
    d.demo.q.row(t) = guess.transpose();
    d.demo.x(t, 0) = 0.0;
    d.demo.x(t, 1) = trace.ball_y[begin + static_cast<std::size_t>(t)];
    d.hand_y.push_back(yh);
  }
  return d;
}

Demonstration resample(const Demonstration& d, Eigen::Index T) {
  Demonstration out{Eigen::MatrixXd(T, d.q.cols()), Eigen::MatrixXd(T, d.x.cols())};
  const auto n = d.q.rows();
  for (Eigen::Index t = 0; t < T; ++t) {
    const double pos = static_cast<double>(t) * static_cast<double>(n) / static_cast<double>(T);
    const auto i0 = static_cast<Eigen::Index>(std::floor(pos));
    const double f = pos - static_cast<double>(i0);
    const Eigen::Index a = std::min(i0, n - 1);
    const Eigen::Index b = (i0 + 1) % n;
    out.q.row(t) = (1.0 - f) * d.q.row(a) + f * d.q.row(b);
    out.x.row(t) = (1.0 - f) * d.x.row(a) + f * d.x.row(b);
  }
  return out;
}

}  // namespace

BallDemo synth_ball_demo(const BallParams& params, const DualArm& arm, const BallExpert& expert,
                         double dt) {
  if (!(dt > 0.0)) throw ConfigError("ball demo: dt must be positive");
  return cycle_demo(run_expert(params, arm, expert, dt, 15.0), arm, expert, dt);
}

DemonstrationSet synth_ball_demos(const BallParams& params, const DualArm& arm, const BallExpert& expert,
                                  int count, std::uint64_t seed, double dt) {
  if (count < 1) throw ConfigError("ball demos: count must be >= 1");
  DemonstrationSet set;
  set.dt = dt;
  const BallDemo nominal = synth_ball_demo(params, arm, expert, dt);
  set.demos.push_back(nominal.demo);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 1; n < count; ++n) {
    BallExpert e = expert;
    e.hand_extended += 0.02 * u(rng);
    e.hand_retracted += 0.02 * u(rng);
    e.push_duration += 0.03 * u(rng);
    const BallDemo d = synth_ball_demo(params, arm, e, dt);
    set.demos.push_back(resample(d.demo, nominal.demo.q.rows()));
  }
  set.validate();
  return set;
}

}  // namespace ppmp
