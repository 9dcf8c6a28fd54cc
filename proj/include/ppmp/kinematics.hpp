#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ppmp/error.hpp"
#include "ppmp/portrait.hpp"

namespace ppmp {

// Planar pose of a chain base: position (m) and heading (rad).
struct BasePose {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// Common interface of everything the IK solver can drive.
class Kinematics {
 public:
  virtual ~Kinematics() = default;
  [[nodiscard]] virtual int dof() const = 0;
  [[nodiscard]] virtual int effector_dim() const = 0;
  [[nodiscard]] virtual Eigen::VectorXd forward(const Eigen::VectorXd& q) const = 0;
  [[nodiscard]] virtual Eigen::MatrixXd jacobian(const Eigen::VectorXd& q) const = 0;
  [[nodiscard]] virtual Eigen::VectorXd lower() const = 0;
  [[nodiscard]] virtual Eigen::VectorXd upper() const = 0;
  // Nearest point of the reachable workspace to x. Returns x itself when x is
  // inside the reach bound.
  [[nodiscard]] virtual Eigen::VectorXd closest_reachable(const Eigen::VectorXd& x) const = 0;
};

class KinematicChain final : public Kinematics {
 public:
  KinematicChain(std::vector<double> link_lengths, std::vector<std::pair<double, double>> limits,
                 BasePose base = {});

  [[nodiscard]] int dof() const override { return static_cast<int>(links_.size()); }
  [[nodiscard]] int effector_dim() const override { return 2; }
  [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& q) const override;
  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& q) const override;
  [[nodiscard]] Eigen::VectorXd lower() const override;
  [[nodiscard]] Eigen::VectorXd upper() const override;
  [[nodiscard]] Eigen::VectorXd closest_reachable(const Eigen::VectorXd& x) const override;

  [[nodiscard]] const std::vector<double>& links() const { return links_; }
  [[nodiscard]] const std::vector<std::pair<double, double>>& limits() const { return limits_; }
  [[nodiscard]] const BasePose& base() const { return base_; }
  // Reachable annulus around the base, ignoring joint limits.
  [[nodiscard]] double max_reach() const;
  [[nodiscard]] double min_reach() const;

  // Reflection across the sagittal (x = 0) plane: base mirrored, joint
  // directions and limits negated.
  [[nodiscard]] KinematicChain mirrored() const;

 private:
  std::vector<double> links_;
  std::vector<std::pair<double, double>> limits_;
  BasePose base_;
};

// Shared waist yaw plus two mirrored planar arms. q = [waist, left..., right...],
// effector = [x_left, y_left, x_right, y_right]. The waist rotates both arm
// bases about the origin.
class DualArm final : public Kinematics {
 public:
  DualArm(KinematicChain left, std::pair<double, double> waist_limits);

  [[nodiscard]] int dof() const override { return 1 + 2 * left_.dof(); }
  [[nodiscard]] int effector_dim() const override { return 4; }
  [[nodiscard]] Eigen::VectorXd forward(const Eigen::VectorXd& q) const override;
  [[nodiscard]] Eigen::MatrixXd jacobian(const Eigen::VectorXd& q) const override;
  [[nodiscard]] Eigen::VectorXd lower() const override;
  [[nodiscard]] Eigen::VectorXd upper() const override;
  [[nodiscard]] Eigen::VectorXd closest_reachable(const Eigen::VectorXd& x) const override;

  [[nodiscard]] const KinematicChain& left() const { return left_; }
  [[nodiscard]] const KinematicChain& right() const { return right_; }
  [[nodiscard]] std::pair<double, double> waist_limits() const { return waist_; }

  // Default desk-scale robot: shoulders at (+-0.2, 0) facing +y, links
  // (0.30, 0.25, 0.12) m.
  static DualArm desk();

 private:
  KinematicChain left_;
  KinematicChain right_;
  std::pair<double, double> waist_;
};

class IkError : public NumericError {
 public:
  IkError(const std::string& what, double residual, Eigen::VectorXd closest)
      : NumericError(what), residual_(residual), closest_(std::move(closest)) {}
  [[nodiscard]] double residual() const { return residual_; }
  [[nodiscard]] const Eigen::VectorXd& closest() const { return closest_; }

 private:
  double residual_;
  Eigen::VectorXd closest_;
};

struct IkOptions {
  double tolerance = 1e-6;
  int max_iterations = 200;
  double damping = 1e-3;
};

struct IkResult {
  Eigen::VectorXd q;
  double residual = 0.0;
  int iterations = 0;
};

// Damped least squares from q_guess, joint limits clamped every iteration.
// Throws IkError when the target lies outside the reach bound or the residual
// stays above tolerance.
IkResult inverse(const Kinematics& kin, const Eigen::VectorXd& x_target,
                 const Eigen::VectorXd& q_guess, const IkOptions& options = {});

struct AugmentOptions {
  int count = 50;
  double sigma = 0.03;
  std::uint64_t seed = 1;
  // effector_dim x d_x map from a target offset to the matching effector
  // offset. Empty: identity (requires effector_dim == d_x).
  Eigen::MatrixXd effector_gain;
  int max_retries = 10;
  IkOptions ik;
};

// Expands one nominal demonstration into `count` samples. Each sample draws one
// offset eps ~ N(0, sigma^2 I) applied to the whole target trajectory; joints
// are re-solved per step with IK warm-started at the nominal pose so the
// effector follows forward(q_demo) + effector_gain * eps. A sample whose
// offset is unreachable at some step redraws its offset.
DemonstrationSet augment(const Demonstration& nominal, double dt, const Kinematics& kin,
                         const AugmentOptions& options);

nlohmann::json chain_to_json(const KinematicChain& chain);
KinematicChain chain_from_json(const nlohmann::json& doc, const std::string& context);
nlohmann::json dual_arm_to_json(const DualArm& arm);
DualArm dual_arm_from_json(const nlohmann::json& doc, const std::string& context);

}  // namespace ppmp
