#include "ppmp/tasks/footstep.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <random>

#include "ppmp/error.hpp"
#include "ppmp/tasks/common.hpp"

namespace ppmp {

void FootstepParams::validate() const {
  if (!(period > 0.0)) throw ConfigError("footstep: period must be positive");
  if (links.empty() || links.size() != limits.size()) throw ConfigError("footstep: links and limits must match");
  if (!(foot_high > foot_low) || !(hip_y > foot_high)) throw ConfigError("footstep: bad foot heights");
  if (!(target_span >= 0.0)) throw ConfigError("footstep: target_span must be >= 0");
  if (!(dt > 0.0) || !(demo_dt > 0.0) || !(duration > 0.0)) throw ConfigError("footstep: bad time step");
  if (!(dmp_update_rate > 0.0)) throw ConfigError("footstep: dmp_update_rate must be positive");
  const double steps = period / demo_dt;
  if (std::fabs(steps - std::round(steps)) > 1e-9 || steps < 8) {
    throw ConfigError("footstep: period must be a whole number (>= 8) of demo steps");
  }
}

double FootstepParams::omega() const { return 2.0 * kPi / period; }

double FootstepParams::target(double t) const {
  double x = target_mean;
  for (const SineComponent& c : schedule) x += c.amplitude * std::sin(2.0 * kPi * c.frequency * t + c.phase);
  return x;
}

double FootstepParams::gait_phase(double t) const { return wrap_angle(omega() * t); }

Eigen::Vector2d FootstepParams::foot(double x_target, double phi) const {
  const double c = std::cos(phi);
  return {x_target * 0.5 * (1.0 + c), foot_low + (foot_high - foot_low) * 0.5 * (1.0 - c)};
}

KinematicChain footstep_leg(const FootstepParams& params) {
  return KinematicChain(params.links, params.limits, BasePose{0.0, params.hip_y, -kPi / 2});
}

namespace {

Eigen::MatrixXd leg_cycle(const FootstepParams& p, const KinematicChain& leg, double x_target, int T) {
  Eigen::VectorXd guess(leg.dof());
  guess.setZero();
  guess[1] = 0.6;
  guess[2] = -0.6;
  Eigen::MatrixXd q(T, leg.dof());
  // Second pass starts from the end of the first so the cycle closes.
  for (int pass = 0; pass < 2; ++pass) {
    for (int t = 0; t < T; ++t) {
      const double phi = 2.0 * kPi * t / T;
      guess = inverse(leg, p.foot(x_target, phi), guess).q;
      if (pass == 1) q.row(t) = guess.transpose();
    }
  }
  return q;
}

}  // namespace

DemonstrationSet synth_footstep_demos(const FootstepParams& params, const KinematicChain& leg, int count,
                                      std::uint64_t seed) {
  params.validate();
  if (count < 1) throw ConfigError("footstep demos: count must be >= 1");
  const int T = static_cast<int>(std::lround(params.period / params.demo_dt));
  DemonstrationSet set;
  set.dt = params.demo_dt;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n = 0; n < count; ++n) {
    const double x_target = n == 0 ? params.target_mean : params.target_mean + params.target_span * u(rng);
    Demonstration d;
    d.q = leg_cycle(params, leg, x_target, T);
    d.x.resize(T, 2);
    for (int t = 0; t < T; ++t) {
      d.x(t, 0) = std::cos(2.0 * kPi * t / T);
      d.x(t, 1) = x_target;
    }
    set.demos.push_back(std::move(d));
  }
  set.validate();
  return set;
}

void summarize(PlacementResult& r) {
  r.mean_error = 0.0;
  r.max_error = 0.0;
  for (double e : r.errors) {
    r.mean_error += e;
    r.max_error = std::max(r.max_error, e);
  }
  if (!r.errors.empty()) r.mean_error /= static_cast<double>(r.errors.size());
}

void digest_target(PlacementResult& r, double target) {
  std::uint64_t bits = 0;
  std::memcpy(&bits, &target, sizeof bits);
  for (int i = 0; i < 8; ++i) {
    r.target_digest ^= (bits >> (8 * i)) & 0xffU;
    r.target_digest *= 0x100000001b3ULL;
  }
}

PlacementResult run_footstep_ppmp(const FootstepParams& params, const KinematicChain& leg,
                                  const PhasePortrait& portrait, double stiffness, double shift) {
  params.validate();
  if (portrait.mode() != PhaseMode::cyclic || portrait.d_q() != leg.dof() || portrait.d_x() != 2) {
    throw ConfigError("footstep needs a cyclic portrait over the leg joints and [gait, target]");
  }
  const RbfBasis basis = RbfBasis::uniform(2, PhaseMode::cyclic);
  PpmpController ctrl(portrait, CouplingPolicy{basis, PolicyWeights::constant(2, stiffness, shift)}, 0.5,
                      params.omega());
  ctrl.override_coupling(Coupling{stiffness, shift});
  const auto ticks = static_cast<long>(std::lround(params.duration / params.dt));
  Eigen::VectorXd x(2);
  PlacementResult out;
  double plan_ns = 0.0;
  double prev_phase = params.gait_phase(0.0);
  for (long k = 0; k <= ticks; ++k) {
    const double t = static_cast<double>(k) * params.dt;
    const double phase = params.gait_phase(t);
    const double target = params.target(t);
    digest_target(out, target);
    x << std::cos(phase), target;
    ctrl.observe(x, params.dt);
    if (k > 0) ctrl.advance_phase(params.dt);
    const auto start = std::chrono::steady_clock::now();
    const Eigen::VectorXd& q = ctrl.command();
    plan_ns += std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - start).count();
    ++out.plans;
    if (k > 0 && prev_phase < 0.0 && phase >= 0.0) {
      out.errors.push_back(std::fabs(leg.forward(q)[0] - target));
    }
    prev_phase = phase;
  }
  out.plan_ms = plan_ns * 1e-6 / static_cast<double>(out.plans);
  summarize(out);
  return out;
}

}  // namespace ppmp
