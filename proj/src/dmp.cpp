#include "ppmp/dmp.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "ppmp/angle.hpp"
#include "ppmp/error.hpp"

namespace ppmp {

double PeriodicDmp::basis_width() const { return width > 0.0 ? width : 2.5 * basis_count(); }

void PeriodicDmp::validate() const {
  if (!(tau > 0.0)) throw ConfigError("dmp: tau must be positive");
  if (!(alpha_z > 0.0) || !(beta_z > 0.0)) throw ConfigError("dmp: gains must be positive");
  if (basis_count() < 1) throw ConfigError("dmp: needs at least one basis function");
  if (!weights.allFinite() || !std::isfinite(goal) || !std::isfinite(amplitude)) {
    throw ConfigError("dmp: non-finite parameters");
  }
}

namespace {

Eigen::RowVectorXd basis_row(int n, double h, double phi) {
  Eigen::RowVectorXd out(n);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double c = 2.0 * kPi * i / n;
    out[i] = std::exp(h * (std::cos(phi - c) - 1.0));
    sum += out[i];
  }
  return out / sum;
}

}  // namespace

double PeriodicDmp::forcing(double phi) const {
  const int n = basis_count();
  const double h = basis_width();
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double psi = std::exp(h * (std::cos(phi - 2.0 * kPi * i / n) - 1.0));
    num += psi * weights[i];
    den += psi;
  }
  return amplitude * num / den;
}

DmpState dmp_step(const PeriodicDmp& dmp, const DmpState& s, double dt) {
  const double zdot = (dmp.alpha_z * (dmp.beta_z * (dmp.goal - s.y) - s.z) + dmp.forcing(s.phi)) / dmp.tau;
  const double ydot = s.z / dmp.tau;
  return {s.y + dt * ydot, s.z + dt * zdot, s.phi + dt / dmp.tau};
}

Eigen::VectorXd dmp_rollout(const PeriodicDmp& dmp, const DmpState& start, double dt, int steps) {
  dmp.validate();
  if (!(dt > 0.0)) throw ConfigError("dmp_rollout: dt must be positive");
  if (steps < 1) throw ConfigError("dmp_rollout: steps must be >= 1");
  Eigen::VectorXd y(steps);
  DmpState s = start;
  for (int k = 0; k < steps; ++k) {
    y[k] = s.y;
    s = dmp_step(dmp, s, dt);
  }
  return y;
}

PeriodicDmp fit_periodic_dmp(std::span<const double> y, double dt, int basis_count, double ridge) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (n < 4) throw ConfigError("fit_periodic_dmp: need at least 4 samples per cycle");
  if (!(dt > 0.0)) throw ConfigError("fit_periodic_dmp: dt must be positive");
  if (basis_count < 1) throw ConfigError("fit_periodic_dmp: basis_count must be >= 1");
  PeriodicDmp dmp;
  dmp.tau = static_cast<double>(n) * dt / (2.0 * kPi);
  dmp.weights = Eigen::VectorXd::Zero(basis_count);
  double mean = 0.0;
  for (double v : y) mean += v;
  dmp.goal = mean / static_cast<double>(n);

  Eigen::MatrixXd phi_mat(n, basis_count);
  Eigen::VectorXd f(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const double prev = y[static_cast<std::size_t>((k + n - 1) % n)];
    const double next = y[static_cast<std::size_t>((k + 1) % n)];
    const double cur = y[static_cast<std::size_t>(k)];
    const double yd = (next - prev) / (2.0 * dt);
    const double ydd = (next - 2.0 * cur + prev) / (dt * dt);
    f[k] = dmp.tau * dmp.tau * ydd - dmp.alpha_z * (dmp.beta_z * (dmp.goal - cur) - dmp.tau * yd);
    phi_mat.row(k) =
        basis_row(basis_count, dmp.basis_width(), 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n));
  }
  Eigen::MatrixXd a = phi_mat.transpose() * phi_mat;
  a.diagonal().array() += ridge;
  dmp.weights = a.ldlt().solve(phi_mat.transpose() * f);
  if (!dmp.weights.allFinite()) throw NumericError("fit_periodic_dmp: regression failed");
  return dmp;
}

DmpState dmp_cycle_state(const PeriodicDmp& dmp, std::span<const double> y, double dt, std::size_t k) {
  const std::size_t n = y.size();
  if (k >= n || n < 3) throw ConfigError("dmp_cycle_state: index out of range");
  const double yd = (y[(k + 1) % n] - y[(k + n - 1) % n]) / (2.0 * dt);
  return {y[k], dmp.tau * yd, 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n)};
}

double dmp_touchdown(const PeriodicDmp& dmp, const ReplanRequest& request) {
  if (!(request.dt > 0.0)) throw ConfigError("dmp_touchdown: dt must be positive");
  if (!(request.touchdown_phi >= request.state.phi)) throw ConfigError("dmp_touchdown: touchdown lies in the past");
  DmpState s = request.state;
  const double dphi = request.dt / dmp.tau;
  const auto steps = static_cast<long>(std::ceil((request.touchdown_phi - s.phi) / dphi - 1e-9));
  for (long k = 0; k < steps; ++k) s = dmp_step(dmp, s, request.dt);
  return s.y;
}

PeriodicDmp dmp_replan(const PeriodicDmp& dmp, const ReplanRequest& request, int budget,
                       const ReplanConfig& config, std::uint64_t seed) {
  dmp.validate();
  if (budget < 0) throw ConfigError("dmp_replan: budget must be >= 0");
  if (budget == 0) return dmp;
  if (config.rollouts < 1 || !(config.noise_std >= 0.0)) throw ConfigError("dmp_replan: bad search config");
  PeriodicDmp work = dmp;
  FunctionTask task([&](const Eigen::VectorXd& w) {
    PeriodicDmp trial = dmp;
    trial.weights = w;
    return std::fabs(dmp_touchdown(trial, request) - request.target);
  });
  SearchConfig sc;
  sc.rollouts_per_update = config.rollouts;
  sc.updates = budget;
  sc.lambda = config.lambda;
  sc.noise_decay = config.noise_decay;
  sc.noise_variance = Eigen::VectorXd::Constant(dmp.basis_count(), config.noise_std * config.noise_std);
  sc.seed = seed;
  work.weights = run_training(task, dmp.weights, sc).weights;
  return work;
}

}  // namespace ppmp
