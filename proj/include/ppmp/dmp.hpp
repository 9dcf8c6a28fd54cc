#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>

#include "ppmp/policy_search.hpp"

namespace ppmp {

// Rhythmic DMP on one coordinate:
//   tau z' = alpha_z (beta_z (g - y) - z) + f(phi),  tau y' = z,  tau phi' = 1
//   f(phi) = r sum_i psi_i w_i / sum_i psi_i,  psi_i = exp(h (cos(phi - c_i) - 1))
struct PeriodicDmp {
  double tau = 1.0;
  double goal = 0.0;
  double amplitude = 1.0;
  double alpha_z = 25.0;
  double beta_z = 6.25;
  double width = 0.0;  // h; 0 picks 2.5 * basis count
  Eigen::VectorXd weights;

  [[nodiscard]] int basis_count() const { return static_cast<int>(weights.size()); }
  [[nodiscard]] double basis_width() const;
  [[nodiscard]] double forcing(double phi) const;
  void validate() const;
};

struct DmpState {
  double y = 0.0;
  double z = 0.0;
  double phi = 0.0;
};

// One explicit Euler step.
DmpState dmp_step(const PeriodicDmp& dmp, const DmpState& s, double dt);

// Positions y over `steps` steps of size dt starting from `start`
// (the first entry is start.y).
Eigen::VectorXd dmp_rollout(const PeriodicDmp& dmp, const DmpState& start, double dt, int steps);

// Least-squares fit of the forcing weights to one period of y sampled at dt
// (the sample after the last equals the first). Goal is the cycle mean.
PeriodicDmp fit_periodic_dmp(std::span<const double> y, double dt, int basis_count, double ridge = 1e-8);

// State on the demonstrated cycle at sample index k.
DmpState dmp_cycle_state(const PeriodicDmp& dmp, std::span<const double> y, double dt, std::size_t k);

struct ReplanRequest {
  DmpState state;
  double target = 0.0;
  // Phase at which placement is measured, as an absolute canonical phase
  // greater than state.phi.
  double touchdown_phi = 0.0;
  double dt = 1e-3;
};

struct ReplanConfig {
  int rollouts = 10;
  double noise_std = 2.0;
  double lambda = 10.0;
  double noise_decay = 0.95;
};

// y at the touchdown phase when integrating from the request state.
double dmp_touchdown(const PeriodicDmp& dmp, const ReplanRequest& request);

// Pi^BB over the forcing weights, `budget` updates, cost |y_touchdown - target|.
// Budget 0 returns the DMP unchanged.
PeriodicDmp dmp_replan(const PeriodicDmp& dmp, const ReplanRequest& request, int budget,
                       const ReplanConfig& config, std::uint64_t seed);

}  // namespace ppmp
