#include "ppmp/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ppmp/angle.hpp"
#include "ppmp/io.hpp"

namespace ppmp {

namespace {

std::string format_point(const Eigen::VectorXd& v) {
  std::ostringstream out;
  out << '(';
  for (Eigen::Index i = 0; i < v.size(); ++i) out << (i ? ", " : "") << io::format_double(v[i]);
  out << ')';
  return out.str();
}

Eigen::Vector2d clamp_radius(const Eigen::Vector2d& p, const Eigen::Vector2d& center, double r_min,
                             double r_max) {
  const Eigen::Vector2d d = p - center;
  const double r = d.norm();
  if (r >= r_min && r <= r_max) return p;
  const Eigen::Vector2d dir = r > 0.0 ? Eigen::Vector2d(d / r) : Eigen::Vector2d(1.0, 0.0);
  return center + dir * std::clamp(r, r_min, r_max);
}

Eigen::Matrix2d rotation(double a) {
  Eigen::Matrix2d r;
  r << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  return r;
}

}  // namespace

KinematicChain::KinematicChain(std::vector<double> link_lengths,
                               std::vector<std::pair<double, double>> limits, BasePose base)
    : links_(std::move(link_lengths)), limits_(std::move(limits)), base_(base) {
  if (links_.empty()) throw ConfigError("kinematic chain needs at least one link");
  if (limits_.size() != links_.size()) {
    throw ConfigError("kinematic chain: " + std::to_string(links_.size()) + " links but " +
                      std::to_string(limits_.size()) + " joint limits");
  }
  for (std::size_t i = 0; i < links_.size(); ++i) {
    if (!(links_[i] > 0.0) || !std::isfinite(links_[i])) {
      throw ConfigError("link " + std::to_string(i) + " length must be positive");
    }
    if (!(limits_[i].first < limits_[i].second)) {
      throw ConfigError("joint " + std::to_string(i) + " limits must satisfy min < max");
    }
  }
}

Eigen::VectorXd KinematicChain::forward(const Eigen::VectorXd& q) const {
  if (q.size() != dof()) throw ConfigError("forward: joint vector has wrong size");
  double a = base_.theta;
  Eigen::Vector2d p(base_.x, base_.y);
  for (std::size_t i = 0; i < links_.size(); ++i) {
    a += q[static_cast<Eigen::Index>(i)];
    p += links_[i] * Eigen::Vector2d(std::cos(a), std::sin(a));
  }
  return p;
}

Eigen::MatrixXd KinematicChain::jacobian(const Eigen::VectorXd& q) const {
  if (q.size() != dof()) throw ConfigError("jacobian: joint vector has wrong size");
  const auto n = static_cast<Eigen::Index>(links_.size());
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(2, n);
  double a = base_.theta;
  for (Eigen::Index i = 0; i < n; ++i) {
    a += q[i];
    const Eigen::Vector2d d = links_[static_cast<std::size_t>(i)] * Eigen::Vector2d(-std::sin(a), std::cos(a));
    for (Eigen::Index c = 0; c <= i; ++c) j.col(c) += d;
  }
  return j;
}

Eigen::VectorXd KinematicChain::lower() const {
  Eigen::VectorXd v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = limits_[static_cast<std::size_t>(i)].first;
  return v;
}

Eigen::VectorXd KinematicChain::upper() const {
  Eigen::VectorXd v(dof());
  for (int i = 0; i < dof(); ++i) v[i] = limits_[static_cast<std::size_t>(i)].second;
  return v;
}

double KinematicChain::max_reach() const {
  double s = 0.0;
  for (double l : links_) s += l;
  return s;
}

double KinematicChain::min_reach() const {
  const double longest = *std::max_element(links_.begin(), links_.end());
  return std::max(0.0, 2.0 * longest - max_reach());
}

Eigen::VectorXd KinematicChain::closest_reachable(const Eigen::VectorXd& x) const {
  if (x.size() != 2) throw ConfigError("chain target must be 2-D");
  return clamp_radius(x, Eigen::Vector2d(base_.x, base_.y), min_reach(), max_reach());
}

KinematicChain KinematicChain::mirrored() const {
  std::vector<std::pair<double, double>> lim;
  lim.reserve(limits_.size());
  for (const auto& [lo, hi] : limits_) lim.emplace_back(-hi, -lo);
  return KinematicChain(links_, std::move(lim), BasePose{-base_.x, base_.y, kPi - base_.theta});
}

DualArm::DualArm(KinematicChain left, std::pair<double, double> waist_limits)
    : left_(std::move(left)), right_(left_.mirrored()), waist_(waist_limits) {
  if (!(waist_.first < waist_.second)) throw ConfigError("waist limits must satisfy min < max");
}

DualArm DualArm::desk() {
  return DualArm(KinematicChain({0.30, 0.25, 0.12}, {{-1.2, 2.6}, {-2.6, 0.3}, {-1.6, 1.6}},
                                BasePose{-0.2, 0.0, kPi / 2.0}),
                 {-0.4, 0.4});
}

Eigen::VectorXd DualArm::forward(const Eigen::VectorXd& q) const {
  if (q.size() != dof()) throw ConfigError("forward: joint vector has wrong size");
  const int n = left_.dof();
  const Eigen::Matrix2d r = rotation(q[0]);
  Eigen::VectorXd out(4);
  out.head<2>() = r * left_.forward(q.segment(1, n));
  out.tail<2>() = r * right_.forward(q.segment(1 + n, n));
  return out;
}

Eigen::MatrixXd DualArm::jacobian(const Eigen::VectorXd& q) const {
  if (q.size() != dof()) throw ConfigError("jacobian: joint vector has wrong size");
  const int n = left_.dof();
  const Eigen::Matrix2d r = rotation(q[0]);
  const Eigen::Matrix2d dr = rotation(q[0] + kPi / 2.0);
  Eigen::MatrixXd j = Eigen::MatrixXd::Zero(4, dof());
  const Eigen::VectorXd ql = q.segment(1, n);
  const Eigen::VectorXd qr = q.segment(1 + n, n);
  j.block<2, 1>(0, 0) = dr * left_.forward(ql);
  j.block<2, 1>(2, 0) = dr * right_.forward(qr);
  j.block(0, 1, 2, n) = r * left_.jacobian(ql);
  j.block(2, 1 + n, 2, n) = r * right_.jacobian(qr);
  return j;
}

Eigen::VectorXd DualArm::lower() const {
  Eigen::VectorXd v(dof());
  v << waist_.first, left_.lower(), right_.lower();
  return v;
}

Eigen::VectorXd DualArm::upper() const {
  Eigen::VectorXd v(dof());
  v << waist_.second, left_.upper(), right_.upper();
  return v;
}

Eigen::VectorXd DualArm::closest_reachable(const Eigen::VectorXd& x) const {
  if (x.size() != 4) throw ConfigError("dual-arm target must be 4-D");
  const auto reach = [](const KinematicChain& c) {
    return std::hypot(c.base().x, c.base().y) + c.max_reach();
  };
  Eigen::VectorXd out(4);
  out.head<2>() = clamp_radius(x.head<2>(), Eigen::Vector2d::Zero(), 0.0, reach(left_));
  out.tail<2>() = clamp_radius(x.tail<2>(), Eigen::Vector2d::Zero(), 0.0, reach(right_));
  return out;
}

IkResult inverse(const Kinematics& kin, const Eigen::VectorXd& x_target,
                 const Eigen::VectorXd& q_guess, const IkOptions& options) {
  if (x_target.size() != kin.effector_dim()) throw ConfigError("inverse: target has wrong size");
  if (q_guess.size() != kin.dof()) throw ConfigError("inverse: guess has wrong size");
  if (!x_target.allFinite() || !q_guess.allFinite()) throw NumericError("inverse: non-finite input");

  const Eigen::VectorXd closest = kin.closest_reachable(x_target);
  const double outside = (closest - x_target).norm();
  if (outside > options.tolerance) {
    throw IkError("unreachable target " + format_point(x_target) + "; closest reachable point " +
                      format_point(closest),
                  outside, closest);
  }

  const Eigen::VectorXd lo = kin.lower();
  const Eigen::VectorXd hi = kin.upper();
  IkResult res;
  res.q = q_guess.cwiseMax(lo).cwiseMin(hi);
  Eigen::VectorXd err = x_target - kin.forward(res.q);
  res.residual = err.norm();
  const auto m = kin.effector_dim();
  double lambda = options.damping;
  while (res.residual > options.tolerance && res.iterations < options.max_iterations) {
    ++res.iterations;
    Eigen::MatrixXd j = kin.jacobian(res.q);
    Eigen::VectorXd dq;
    // Joints sitting on a limit and pushed outward are frozen and the step is
    // re-solved without them; plain clamping stalls next to limits.
    for (int pass = 0; pass <= kin.dof(); ++pass) {
      const Eigen::MatrixXd a = j * j.transpose() + lambda * lambda * Eigen::MatrixXd::Identity(m, m);
      dq = j.transpose() * a.ldlt().solve(err);
      bool frozen = false;
      for (int i = 0; i < kin.dof(); ++i) {
        const bool blocked = (res.q[i] <= lo[i] && dq[i] < 0.0) || (res.q[i] >= hi[i] && dq[i] > 0.0);
        if (blocked && !j.col(i).isZero(0.0)) {
          j.col(i).setZero();
          frozen = true;
        }
      }
      if (!frozen) break;
    }
    const Eigen::VectorXd q_new = (res.q + dq).cwiseMax(lo).cwiseMin(hi);
    const Eigen::VectorXd err_new = x_target - kin.forward(q_new);
    const double r_new = err_new.norm();
    if (r_new < res.residual) {
      res.q = q_new;
      err = err_new;
      res.residual = r_new;
      lambda = std::max(options.damping, lambda * 0.1);
    } else {
      lambda *= 10.0;
      if (lambda > 1e6) break;
    }
  }
  if (res.residual > options.tolerance) {
    throw IkError("inverse kinematics did not converge to " + format_point(x_target) +
                      " (residual " + io::format_double(res.residual) + " m after " +
                      std::to_string(res.iterations) + " iterations)",
                  res.residual, kin.forward(res.q));
  }
  return res;
}

DemonstrationSet augment(const Demonstration& nominal, double dt, const Kinematics& kin,
                         const AugmentOptions& options) {
  const auto T = nominal.q.rows();
  const auto dx = nominal.x.cols();
  if (T < 2 || nominal.x.rows() != T) throw ConfigError("augment: nominal needs >= 2 aligned steps");
  if (nominal.q.cols() != kin.dof()) throw ConfigError("augment: nominal joints do not match the robot");
  if (options.count < 1) throw ConfigError("augment: count must be >= 1");
  if (!(options.sigma >= 0.0)) throw ConfigError("augment: sigma must be >= 0");
  if (options.max_retries < 0) throw ConfigError("augment: max_retries must be >= 0");
  Eigen::MatrixXd gain = options.effector_gain;
  if (gain.size() == 0) {
    if (kin.effector_dim() != dx) throw ConfigError("augment: effector gain required when d_x differs");
    gain = Eigen::MatrixXd::Identity(dx, dx);
  }
  if (gain.rows() != kin.effector_dim() || gain.cols() != dx) {
    throw ConfigError("augment: effector gain must be " + std::to_string(kin.effector_dim()) + " x " +
                      std::to_string(dx));
  }

  std::vector<Eigen::VectorXd> nominal_ee(static_cast<std::size_t>(T));
  for (Eigen::Index t = 0; t < T; ++t) {
    nominal_ee[static_cast<std::size_t>(t)] = kin.forward(nominal.q.row(t).transpose());
  }

  DemonstrationSet set;
  set.dt = dt;
  for (int n = 0; n < options.count; ++n) {
    std::seed_seq seq{static_cast<std::uint32_t>(options.seed), static_cast<std::uint32_t>(options.seed >> 32),
                      static_cast<std::uint32_t>(n)};
    std::mt19937_64 rng(seq);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int attempt = 0;; ++attempt) {
      Eigen::VectorXd eps(dx);
      for (Eigen::Index i = 0; i < dx; ++i) eps[i] = options.sigma * normal(rng);
      const Eigen::VectorXd shift = gain * eps;
      Demonstration d{Eigen::MatrixXd(T, kin.dof()), Eigen::MatrixXd(T, dx)};
      try {
        for (Eigen::Index t = 0; t < T; ++t) {
          const Eigen::VectorXd guess = nominal.q.row(t).transpose();
          d.q.row(t) = inverse(kin, nominal_ee[static_cast<std::size_t>(t)] + shift, guess, options.ik)
                           .q.transpose();
          d.x.row(t) = nominal.x.row(t) + eps.transpose();
        }
      } catch (const IkError& e) {
        if (attempt >= options.max_retries) {
          throw IkError("augment: sample " + std::to_string(n) + " unreachable after " +
                            std::to_string(options.max_retries) + " retries: " + e.what(),
                        e.residual(), e.closest());
        }
        continue;
      }
      set.demos.push_back(std::move(d));
      break;
    }
  }
  return set;
}

nlohmann::json chain_to_json(const KinematicChain& chain) {
  nlohmann::json limits = nlohmann::json::array();
  for (const auto& [lo, hi] : chain.limits()) limits.push_back({lo, hi});
  return {{"links", chain.links()},
          {"limits", limits},
          {"base", {{"x", chain.base().x}, {"y", chain.base().y}, {"theta", chain.base().theta}}}};
}

KinematicChain chain_from_json(const nlohmann::json& doc, const std::string& context) {
  const auto links = io::require<std::vector<double>>(doc, "links", context);
  const auto raw = io::require<std::vector<std::vector<double>>>(doc, "limits", context);
  std::vector<std::pair<double, double>> limits;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i].size() != 2) {
      throw ParseError(context + ".limits[" + std::to_string(i) + "]: expected [min, max]");
    }
    limits.emplace_back(raw[i][0], raw[i][1]);
  }
  BasePose base;
  if (doc.contains("base")) {
    const auto& b = doc.at("base");
    base = {io::require<double>(b, "x", context + ".base"), io::require<double>(b, "y", context + ".base"),
            io::require<double>(b, "theta", context + ".base")};
  }
  try {
    return KinematicChain(links, limits, base);
  } catch (const ConfigError& e) {
    throw ParseError(context + ": " + e.what());
  }
}

nlohmann::json dual_arm_to_json(const DualArm& arm) {
  return {{"waist_limits", {arm.waist_limits().first, arm.waist_limits().second}},
          {"left", chain_to_json(arm.left())}};
}

DualArm dual_arm_from_json(const nlohmann::json& doc, const std::string& context) {
  const auto waist = io::require<std::vector<double>>(doc, "waist_limits", context);
  if (waist.size() != 2) throw ParseError(context + ".waist_limits: expected [min, max]");
  KinematicChain left = chain_from_json(io::require<nlohmann::json>(doc, "left", context), context + ".left");
  try {
    return DualArm(std::move(left), {waist[0], waist[1]});
  } catch (const ConfigError& e) {
    throw ParseError(context + ": " + e.what());
  }
}

}  // namespace ppmp
