#include "ppmp/portrait.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ppmp/error.hpp"
#include "ppmp/kernels/kernels.hpp"

namespace ppmp {

namespace {

constexpr double kSymmetryTol = 1e-10;
constexpr double kPsdTol = -1e-9;

// Cholesky of S_xx after checking its conditioning.
Eigen::LLT<Eigen::MatrixXd> factor_sigma_xx(const Eigen::MatrixXd& sxx) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sxx, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxConditionNumber) {
    throw NumericError("ill-conditioned target covariance (condition number " +
                       (lo > 0.0 ? std::to_string(hi / lo) : std::string("inf")) + ")");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(sxx);
  if (llt.info() != Eigen::Success) throw NumericError("target covariance is not positive definite");
  return llt;
}

}  // namespace

void JointGaussian::validate() const {
  const int d = d_q + d_x;
  if (d_q < 1 || d_x < 1) throw ConfigError("joint Gaussian needs d_q >= 1 and d_x >= 1");
  if (mean.size() != d || cov.rows() != d || cov.cols() != d) {
    throw ConfigError("joint Gaussian dimensions do not match d_q + d_x = " + std::to_string(d));
  }
  if (!mean.allFinite() || !cov.allFinite()) throw ConfigError("joint Gaussian has non-finite entries");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol) {
    throw ConfigError("covariance is not symmetric within 1e-10");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < kPsdTol) {
    throw ConfigError("covariance is not positive semi-definite");
  }
}

ConditionalGaussian condition(const JointGaussian& g, const Eigen::VectorXd& x_obs) {
  if (x_obs.size() != g.d_x) {
    throw ConfigError("condition: observation has " + std::to_string(x_obs.size()) +
                      " entries, expected " + std::to_string(g.d_x));
  }
  const Eigen::MatrixXd sxx = g.sigma_xx();
  const auto llt = factor_sigma_xx(sxx);
  const Eigen::MatrixXd sqx = g.sigma_qx();
  const Eigen::VectorXd innovation = x_obs - g.mu_x();

  ConditionalGaussian out;
  out.mean = g.mu_q() + sqx * llt.solve(innovation);
  Eigen::MatrixXd cov = g.sigma_qq() - sqx * llt.solve(Eigen::MatrixXd(g.sigma_xq()));
  out.cov = 0.5 * (cov + cov.transpose());
  return out;
}

void DemonstrationSet::validate() const {
  if (!(dt > 0.0)) throw ConfigError("demonstration set: dt must be positive");
  if (demos.empty()) throw ConfigError("demonstration set is empty");
  const auto T = demos[0].q.rows();
  const auto dq = demos[0].q.cols();
  const auto dx = demos[0].x.cols();
  for (std::size_t n = 0; n < demos.size(); ++n) {
    const auto& d = demos[n];
    if (d.q.rows() != T || d.x.rows() != T) {
      throw ConfigError("demonstration " + std::to_string(n) + " has a different length");
    }
    if (d.q.cols() != dq || d.x.cols() != dx) {
      throw ConfigError("demonstration " + std::to_string(n) + " has different dimensions");
    }
    if (!d.q.allFinite() || !d.x.allFinite()) {
      throw ConfigError("demonstration " + std::to_string(n) + " contains NaN");
    }
  }
  if (T < 2) throw ConfigError("demonstrations need at least two time steps");
}

PhasePortrait::PhasePortrait(PhaseMode mode, int progress_dim, PlaneNormalization plane,
                             int target_progress_dim, PlaneNormalization target_plane,
                             std::vector<double> phase_index, std::vector<JointGaussian> steps)
    : mode_(mode),
      progress_dim_(progress_dim),
      plane_(plane),
      target_progress_dim_(target_progress_dim),
      target_plane_(target_plane),
      phase_index_(std::move(phase_index)),
      steps_(std::move(steps)) {
  if (steps_.size() != phase_index_.size()) {
    throw ConfigError("portrait has " + std::to_string(steps_.size()) + " steps but " +
                      std::to_string(phase_index_.size()) + " phase indices");
  }
  if (steps_.size() < 2) throw ConfigError("portrait needs at least two steps");
  plane_.validate();
  target_plane_.validate();
  const int dq = steps_.front().d_q;
  const int dx = steps_.front().d_x;
  if (progress_dim_ < 0) throw ConfigError("portrait progress_dim must be non-negative");
  if (target_progress_dim_ < 0 || target_progress_dim_ >= dx) {
    throw ConfigError("portrait target_progress_dim out of range");
  }

  cache_.reserve(steps_.size());
  for (std::size_t t = 0; t < steps_.size(); ++t) {
    const double phi = phase_index_[t];
    if (!std::isfinite(phi) || phi <= -kPi || phi > kPi) {
      throw ConfigError("step " + std::to_string(t) + ": phase outside (-pi, pi]");
    }
    if (mode_ == PhaseMode::single_stroke && (phi < 0.0 || phi > kPi)) {
      throw ConfigError("step " + std::to_string(t) + ": single-stroke phase outside [0, pi]");
    }
    const JointGaussian& g = steps_[t];
    if (g.d_q != dq || g.d_x != dx) {
      throw ConfigError("step " + std::to_string(t) + ": inconsistent dimensions");
    }
    try {
      g.validate();
      const Eigen::MatrixXd sxx = g.sigma_xx();
      const auto llt = factor_sigma_xx(sxx);
      StepCache c;
      c.mu_q = g.mu_q();
      c.mu_x = g.mu_x();
      c.gain = llt.solve(Eigen::MatrixXd(g.sigma_xq())).transpose();
      cache_.push_back(std::move(c));
    } catch (const NumericError& e) {
      throw NumericError("step " + std::to_string(t) + ": " + e.what());
    } catch (const ConfigError& e) {
      throw ConfigError("step " + std::to_string(t) + ": " + e.what());
    }
  }
}

std::size_t PhasePortrait::lookup_index(PhaseAngle phi) const {
  return kernels::nearest_phase(phase_index_, phi.radians(),
                                mode_ == PhaseMode::cyclic ? kernels::PhaseMetric::circular
                                                           : kernels::PhaseMetric::linear);
}

void PhasePortrait::conditioned_mean(std::size_t step, std::span<const double> x_obs,
                                     std::span<double> q_out) const {
  const StepCache& c = cache_.at(step);
  const auto dx = static_cast<std::size_t>(c.mu_x.size());
  if (x_obs.size() != dx || q_out.size() != static_cast<std::size_t>(c.mu_q.size())) {
    throw ConfigError("conditioned_mean: dimension mismatch");
  }
  double delta[16];
  Eigen::VectorXd heap_delta;
  double* dptr = delta;
  if (dx > 16) {
    heap_delta.resize(static_cast<Eigen::Index>(dx));
    dptr = heap_delta.data();
  }
  for (std::size_t j = 0; j < dx; ++j) dptr[j] = x_obs[j] - c.mu_x[static_cast<Eigen::Index>(j)];
  kernels::affine_gain({c.mu_q.data(), static_cast<std::size_t>(c.mu_q.size())},
                       {c.gain.data(), static_cast<std::size_t>(c.gain.size())}, {dptr, dx}, q_out);
}

bool operator==(const PhasePortrait& a, const PhasePortrait& b) {
  if (a.mode_ != b.mode_ || a.progress_dim_ != b.progress_dim_ || !(a.plane_ == b.plane_) ||
      a.target_progress_dim_ != b.target_progress_dim_ || !(a.target_plane_ == b.target_plane_) ||
      a.phase_index_ != b.phase_index_ || a.steps_.size() != b.steps_.size()) {
    return false;
  }
  for (std::size_t t = 0; t < a.steps_.size(); ++t) {
    const auto& x = a.steps_[t];
    const auto& y = b.steps_[t];
    if (x.d_q != y.d_q || x.d_x != y.d_x || x.mean != y.mean || x.cov != y.cov) return false;
  }
  return true;
}

PlaneFit fit_plane(std::span<const double> y, double dt, PhaseMode mode) {
  const std::size_t T = y.size();
  if (T < 2) throw ConfigError("phase plane needs at least two samples");
  PlaneFit out;
  out.velocity.resize(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (mode == PhaseMode::cyclic) {
      const double next = y[(t + 1) % T];
      const double prev = y[(t + T - 1) % T];
      out.velocity[t] = (next - prev) / (2.0 * dt);
    } else if (t == 0) {
      out.velocity[t] = (y[1] - y[0]) / dt;
    } else if (t == T - 1) {
      out.velocity[t] = (y[T - 1] - y[T - 2]) / dt;
    } else {
      out.velocity[t] = (y[t + 1] - y[t - 1]) / (2.0 * dt);
    }
  }
  const auto [ylo, yhi] = std::minmax_element(y.begin(), y.end());
  const auto [vlo, vhi] = std::minmax_element(out.velocity.begin(), out.velocity.end());
  out.norm.y_center = 0.5 * (*ylo + *yhi);
  out.norm.y_scale = 0.5 * (*yhi - *ylo);
  out.norm.y_dot_scale = 0.5 * (*vhi - *vlo);
  if (!(out.norm.y_scale > 0.0) || !(out.norm.y_dot_scale > 0.0)) {
    throw ConfigError("progress coordinate does not move; cannot build a phase plane");
  }
  if (mode == PhaseMode::single_stroke) {
    // Orient the axis so that the stroke runs through the upper half plane.
    std::size_t below = 0;
    for (std::size_t t = 0; t < T; ++t) {
      if (phase_from_plane({y[t], out.velocity[t], out.norm}).phase.radians() < 0.0) ++below;
    }
    if (2 * below > T) out.norm.direction = -1.0;
  }
  return out;
}

PhasePortrait fit_portrait(const DemonstrationSet& set, const FitOptions& options) {
  if (set.demos.size() < 2) {
    throw ConfigError("fit_portrait: N < 2 demonstrations (got " +
                      std::to_string(set.demos.size()) + ")");
  }
  if (!(options.regularization >= 0.0)) throw ConfigError("fit_portrait: regularization must be >= 0");
  set.validate();

  const int N = static_cast<int>(set.demos.size());
  const int T = set.steps();
  const int dq = set.d_q();
  const int dx = set.d_x();
  const int d = dq + dx;
  if (options.target_progress_dim < 0 || options.target_progress_dim >= dx) {
    throw ConfigError("fit_portrait: target_progress_dim out of range");
  }

  std::vector<JointGaussian> steps;
  steps.reserve(static_cast<std::size_t>(T));
  std::vector<double> effector_progress(static_cast<std::size_t>(T), 0.0);
  std::vector<double> target_progress(static_cast<std::size_t>(T), 0.0);

  Eigen::MatrixXd samples(N, d);
  for (int t = 0; t < T; ++t) {
    double ee_sum = 0.0;
    for (int n = 0; n < N; ++n) {
      const auto& demo = set.demos[static_cast<std::size_t>(n)];
      samples.row(n).head(dq) = demo.q.row(t);
      samples.row(n).tail(dx) = demo.x.row(t);
      const Eigen::VectorXd q = demo.q.row(t).transpose();
      const Eigen::VectorXd ee = options.effector ? options.effector(q) : q;
      if (options.progress_dim < 0 || options.progress_dim >= ee.size()) {
        throw ConfigError("fit_portrait: progress_dim out of range of the end-effector vector");
      }
      ee_sum += ee[options.progress_dim];
    }
    effector_progress[static_cast<std::size_t>(t)] = ee_sum / N;

    JointGaussian g;
    g.d_q = dq;
    g.d_x = dx;
    g.mean = samples.colwise().mean().transpose();
    const Eigen::MatrixXd centered = samples.rowwise() - g.mean.transpose();
    g.cov = (centered.transpose() * centered) / static_cast<double>(N - 1);
    g.cov = 0.5 * (g.cov + g.cov.transpose());
    g.cov.diagonal().array() += options.regularization;
    target_progress[static_cast<std::size_t>(t)] = g.mean[dq + options.target_progress_dim];
    steps.push_back(std::move(g));
  }

  const PlaneFit robot_plane = fit_plane(effector_progress, set.dt, options.mode);
  PlaneFit target_plane;
  try {
    target_plane = fit_plane(target_progress, set.dt, options.mode);
  } catch (const ConfigError&) {
    // A target that never moves still gets a usable (unit) plane.
    target_plane.norm = PlaneNormalization{};
  }

  std::vector<double> phases(static_cast<std::size_t>(T));
  std::optional<PhaseAngle> previous;
  for (int t = 0; t < T; ++t) {
    const auto i = static_cast<std::size_t>(t);
    PhaseEstimate est =
        phase_from_plane({effector_progress[i], robot_plane.velocity[i], robot_plane.norm}, previous);
    double phi = est.phase.radians();
    if (options.mode == PhaseMode::single_stroke) phi = clamp_single_stroke(phi);
    phases[i] = phi;
    previous = PhaseAngle(phi);
  }

  return PhasePortrait(options.mode, options.progress_dim, robot_plane.norm,
                       options.target_progress_dim, target_plane.norm, std::move(phases),
                       std::move(steps));
}

}  // namespace ppmp
