#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "ppmp/phase.hpp"

namespace ppmp {

// Gaussian bumps on the target phase, centers spread uniformly over
// [-pi, pi] (cyclic) or [0, pi] (single stroke). Cyclic bumps use the wrap
// distance so the features are continuous across +-pi.
struct RbfBasis {
  Eigen::VectorXd centers;
  double width = 1.0;
  PhaseMode range = PhaseMode::cyclic;

  // Cyclic: c_k = -pi + (k + 1/2) 2pi/N. Single stroke: c_k = k pi/(N-1).
  // width = width_factor * center spacing.
  static RbfBasis uniform(int count, PhaseMode range, double width_factor = 1.0);

  [[nodiscard]] int size() const { return static_cast<int>(centers.size()); }
  [[nodiscard]] double spacing() const;
  void validate() const;
};

// Normalized activations psi(phi), summing to one.
Eigen::VectorXd eval_basis(const RbfBasis& basis, PhaseAngle phi);

// Weights of K(phi) and alpha(phi); the policy-search parameter vector is
// the concatenation [w_K; w_alpha].
struct PolicyWeights {
  Eigen::VectorXd w_k;
  Eigen::VectorXd w_alpha;

  static PolicyWeights constant(int count, double stiffness, double shift);
  static PolicyWeights from_vector(const Eigen::VectorXd& w);
  [[nodiscard]] Eigen::VectorXd to_vector() const;
  void validate(int basis_size) const;
};

// K = max(0, psi^T w_K), alpha = psi^T w_alpha.
Coupling eval_coupling(const RbfBasis& basis, const PolicyWeights& weights, PhaseAngle phi_target);

// Policy file: {range, centers, width, w_K, w_alpha}.
struct CouplingPolicy {
  RbfBasis basis;
  PolicyWeights weights;
};

nlohmann::json policy_to_json(const CouplingPolicy& policy);
CouplingPolicy policy_from_json(const nlohmann::json& doc, const std::string& source = "policy");
void save_policy(const CouplingPolicy& policy, const std::filesystem::path& path,
                 const nlohmann::json& manifest = nullptr);
CouplingPolicy load_policy(const std::filesystem::path& path);

}  // namespace ppmp
