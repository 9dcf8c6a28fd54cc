#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "ppmp/phase.hpp"

namespace ppmp {

// Joint normal distribution over (robot joints q, target position x), stored as
// one mean vector [mu_q; mu_x] and one covariance with blocks
//   [ S_qq  S_qx ]
//   [ S_xq  S_xx ].
struct JointGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  int d_q = 0;
  int d_x = 0;

  [[nodiscard]] auto mu_q() const { return mean.head(d_q); }
  [[nodiscard]] auto mu_x() const { return mean.tail(d_x); }
  [[nodiscard]] auto sigma_qq() const { return cov.topLeftCorner(d_q, d_q); }
  [[nodiscard]] auto sigma_qx() const { return cov.topRightCorner(d_q, d_x); }
  [[nodiscard]] auto sigma_xq() const { return cov.bottomLeftCorner(d_x, d_q); }
  [[nodiscard]] auto sigma_xx() const { return cov.bottomRightCorner(d_x, d_x); }

  // Throws ConfigError on wrong sizes, asymmetry beyond 1e-10 or a minimum
  // eigenvalue below -1e-9.
  void validate() const;
};

struct ConditionalGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

// Gaussian conditional of q given x = x_obs:
//   mean = mu_q + S_qx S_xx^-1 (x_obs - mu_x)
//   cov  = S_qq - S_qx S_xx^-1 S_xq   (symmetrized)
// Throws NumericError when cond(S_xx) exceeds 1e12.
ConditionalGaussian condition(const JointGaussian& g, const Eigen::VectorXd& x_obs);

inline constexpr double kMaxConditionNumber = 1e12;

// One demonstration: T rows of joint angles and target positions.
struct Demonstration {
  Eigen::MatrixXd q;  // T x d_q, rad
  Eigen::MatrixXd x;  // T x d_x, m
};

struct DemonstrationSet {
  double dt = 0.0;
  std::vector<Demonstration> demos;

  [[nodiscard]] int d_q() const { return demos.empty() ? 0 : static_cast<int>(demos[0].q.cols()); }
  [[nodiscard]] int d_x() const { return demos.empty() ? 0 : static_cast<int>(demos[0].x.cols()); }
  [[nodiscard]] int steps() const { return demos.empty() ? 0 : static_cast<int>(demos[0].q.rows()); }

  // Shared T/dt/dimensions, no NaNs.
  void validate() const;
};

// Maps a joint vector to end-effector coordinates; the portrait's phase index is
// computed from coordinate `progress_dim` of this map.
using EffectorMap = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

struct FitOptions {
  PhaseMode mode = PhaseMode::cyclic;
  int progress_dim = 0;
  int target_progress_dim = 0;
  double regularization = 1e-6;
  // Empty: the joint vector itself is used as the end-effector vector.
  EffectorMap effector;
};

class PhasePortrait {
 public:
  PhasePortrait(PhaseMode mode, int progress_dim, PlaneNormalization plane,
                int target_progress_dim, PlaneNormalization target_plane,
                std::vector<double> phase_index, std::vector<JointGaussian> steps);

  [[nodiscard]] PhaseMode mode() const { return mode_; }
  [[nodiscard]] int d_q() const { return steps_.front().d_q; }
  [[nodiscard]] int d_x() const { return steps_.front().d_x; }
  [[nodiscard]] std::size_t size() const { return steps_.size(); }
  [[nodiscard]] int progress_dim() const { return progress_dim_; }
  [[nodiscard]] int target_progress_dim() const { return target_progress_dim_; }
  [[nodiscard]] const PlaneNormalization& plane() const { return plane_; }
  [[nodiscard]] const PlaneNormalization& target_plane() const { return target_plane_; }
  [[nodiscard]] std::span<const double> phase_index() const { return phase_index_; }
  [[nodiscard]] const std::vector<JointGaussian>& steps() const { return steps_; }

  // Step whose stored phase is nearest to phi (wrap distance when cyclic,
  // absolute distance for single strokes); ties go to the earlier step.
  [[nodiscard]] std::size_t lookup_index(PhaseAngle phi) const;
  [[nodiscard]] const JointGaussian& lookup(PhaseAngle phi) const {
    return steps_[lookup_index(phi)];
  }

  // Conditional mean of q at `step` given x_obs, using gains cached at
  // construction. Same value as condition(steps()[step], x_obs).mean.
  void conditioned_mean(std::size_t step, std::span<const double> x_obs,
                        std::span<double> q_out) const;

  friend bool operator==(const PhasePortrait& a, const PhasePortrait& b);

 private:
  struct StepCache {
    Eigen::VectorXd mu_q;
    Eigen::VectorXd mu_x;
    Eigen::MatrixXd gain;  // d_q x d_x, column-major
  };

  PhaseMode mode_;
  int progress_dim_;
  PlaneNormalization plane_;
  int target_progress_dim_;
  PlaneNormalization target_plane_;
  std::vector<double> phase_index_;
  std::vector<JointGaussian> steps_;
  std::vector<StepCache> cache_;
};

// Per-step mean and unbiased covariance over the demonstrations, plus
// regularization * I, re-indexed by the phase of the mean end-effector motion.
PhasePortrait fit_portrait(const DemonstrationSet& demos, const FitOptions& options);

// Phase-plane normalization (mid-range center, half-range scales) of a sampled
// progress coordinate, and its per-sample velocity by central differences
// (periodic when cyclic).
struct PlaneFit {
  PlaneNormalization norm;
  std::vector<double> velocity;
};
PlaneFit fit_plane(std::span<const double> y, double dt, PhaseMode mode);

}  // namespace ppmp
