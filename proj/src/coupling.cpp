#include "ppmp/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "ppmp/error.hpp"
#include "ppmp/io.hpp"

namespace ppmp {

RbfBasis RbfBasis::uniform(int count, PhaseMode range, double width_factor) {
  if (count < 2) throw ConfigError("RBF basis needs at least two centers");
  if (!(width_factor > 0.0)) throw ConfigError("RBF width factor must be positive");
  RbfBasis b;
  b.range = range;
  b.centers.resize(count);
  for (int k = 0; k < count; ++k) {
    b.centers[k] = range == PhaseMode::cyclic ? -kPi + (k + 0.5) * kTwoPi / count
                                              : kPi * k / (count - 1);
  }
  b.width = width_factor * b.spacing();
  return b;
}

double RbfBasis::spacing() const {
  const auto n = static_cast<double>(centers.size());
  return range == PhaseMode::cyclic ? kTwoPi / n : kPi / (n - 1.0);
}

void RbfBasis::validate() const {
  if (centers.size() < 2) throw ConfigError("RBF basis needs at least two centers");
  if (!(width > 0.0) || !std::isfinite(width)) throw ConfigError("RBF width must be positive");
  for (Eigen::Index k = 1; k < centers.size(); ++k) {
    if (!(centers[k] > centers[k - 1])) throw ConfigError("RBF centers must be strictly increasing");
  }
  if (!centers.allFinite()) throw ConfigError("RBF centers must be finite");
}

Eigen::VectorXd eval_basis(const RbfBasis& basis, PhaseAngle phi) {
  const Eigen::Index n = basis.centers.size();
  double p = phi.radians();
  if (basis.range == PhaseMode::single_stroke) p = clamp_single_stroke(p);

  Eigen::VectorXd sq(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double d = basis.range == PhaseMode::cyclic ? wrap_difference(p, basis.centers[k])
                                                      : p - basis.centers[k];
    sq[k] = d * d;
  }
  // Shifting by the smallest distance keeps the largest activation at exp(0),
  // so narrow bases do not underflow to an all-zero vector.
  const double shift = sq.minCoeff();
  const double inv = 1.0 / (2.0 * basis.width * basis.width);
  Eigen::VectorXd psi = (-(sq.array() - shift) * inv).exp().matrix();
  return psi / psi.sum();
}

PolicyWeights PolicyWeights::constant(int count, double stiffness, double shift) {
  return {Eigen::VectorXd::Constant(count, stiffness), Eigen::VectorXd::Constant(count, shift)};
}

PolicyWeights PolicyWeights::from_vector(const Eigen::VectorXd& w) {
  if (w.size() % 2 != 0 || w.size() == 0) {
    throw ConfigError("policy vector must have even, non-zero length");
  }
  const Eigen::Index n = w.size() / 2;
  return {w.head(n), w.tail(n)};
}

Eigen::VectorXd PolicyWeights::to_vector() const {
  Eigen::VectorXd w(w_k.size() + w_alpha.size());
  w << w_k, w_alpha;
  return w;
}

void PolicyWeights::validate(int basis_size) const {
  if (w_k.size() != basis_size || w_alpha.size() != basis_size) {
    throw ConfigError("policy weights do not match the basis size " + std::to_string(basis_size));
  }
  if (!w_k.allFinite() || !w_alpha.allFinite()) throw ConfigError("policy weights must be finite");
}

Coupling eval_coupling(const RbfBasis& basis, const PolicyWeights& weights, PhaseAngle phi_target) {
  const Eigen::VectorXd psi = eval_basis(basis, phi_target);
  return {std::max(0.0, psi.dot(weights.w_k)), psi.dot(weights.w_alpha)};
}

nlohmann::json policy_to_json(const CouplingPolicy& policy) {
  auto vec = [](const Eigen::VectorXd& v) {
    return std::vector<double>(v.data(), v.data() + v.size());
  };
  return nlohmann::json{{"range", std::string(to_string(policy.basis.range))},
                        {"centers", vec(policy.basis.centers)},
                        {"width", policy.basis.width},
                        {"w_K", vec(policy.weights.w_k)},
                        {"w_alpha", vec(policy.weights.w_alpha)}};
}

CouplingPolicy policy_from_json(const nlohmann::json& doc, const std::string& source) {
  auto to_vec = [](const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())).eval();
  };
  CouplingPolicy p;
  try {
    p.basis.range = phase_mode_from_string(io::require<std::string>(doc, "range", source));
  } catch (const ParseError&) {
    throw;
  } catch (const ConfigError& e) {
    throw ParseError(source + ".range: " + e.what());
  }
  p.basis.centers = to_vec(io::require<std::vector<double>>(doc, "centers", source));
  p.basis.width = io::require<double>(doc, "width", source);
  p.weights.w_k = to_vec(io::require<std::vector<double>>(doc, "w_K", source));
  p.weights.w_alpha = to_vec(io::require<std::vector<double>>(doc, "w_alpha", source));
  try {
    p.basis.validate();
    p.weights.validate(p.basis.size());
  } catch (const ConfigError& e) {
    throw ParseError(source + ": " + e.what());
  }
  return p;
}

void save_policy(const CouplingPolicy& policy, const std::filesystem::path& path,
                 const nlohmann::json& manifest) {
  nlohmann::json doc = policy_to_json(policy);
  if (!manifest.is_null()) doc["manifest"] = manifest;
  io::write_json(path, doc);
}

CouplingPolicy load_policy(const std::filesystem::path& path) {
  return policy_from_json(io::read_json(path), path.string());
}

}  // namespace ppmp
