#include "ppmp/compare.hpp"

#include <chrono>
#include <cmath>
#include <optional>
#include <random>

#include "ppmp/error.hpp"

namespace ppmp {

PeriodicDmp footstep_dmp(const FootstepParams& params, int basis_count) {
  params.validate();
  const auto n = static_cast<std::size_t>(std::lround(params.period / params.dt));
  std::vector<double> y(n);
  for (std::size_t k = 0; k < n; ++k) {
    y[k] = params.foot(params.target_mean, 2.0 * kPi * static_cast<double>(k) / static_cast<double>(n))[0];
  }
  return fit_periodic_dmp(y, params.dt, basis_count);
}

PlacementResult run_footstep_dmp(const FootstepParams& params, const PeriodicDmp& dmp, int budget,
                                 const ReplanConfig& config, std::uint64_t seed) {
  params.validate();
  dmp.validate();
  if (budget < 0) throw ConfigError("footstep dmp: budget must be >= 0");
  const double latency = budget / params.dmp_update_rate;
  const auto ticks = static_cast<long>(std::lround(params.duration / params.dt));
  // Start on the demonstrated cycle at gait phase zero.
  const double x0 = params.foot(params.target_mean, 0.0)[0];
  DmpState s{x0, 0.0, 0.0};
  PeriodicDmp active = dmp;
  std::optional<PeriodicDmp> pending;
  double activate_at = 0.0;
  double next_plan = 0.0;
  PlacementResult out;
  double plan_ns = 0.0;
  for (long k = 0; k <= ticks; ++k) {
    const double t = static_cast<double>(k) * params.dt;
    const double target = params.target(t);
    digest_target(out, target);
    if (pending && t >= activate_at - 1e-12) {
      active = *pending;
      pending.reset();
    }
    if (budget > 0 && t >= next_plan - 1e-12) {
      ReplanRequest req;
      req.state = s;
      req.target = target;
      req.dt = params.dt;
      const double ready_phi = s.phi + latency / dmp.tau;
      req.touchdown_phi = 2.0 * kPi * std::ceil(ready_phi / (2.0 * kPi) + 1e-12);
      const std::uint64_t plan_seed = seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(out.plans + 1));
      const auto start = std::chrono::steady_clock::now();
      pending = dmp_replan(dmp, req, budget, config, plan_seed);
      plan_ns += std::chrono::duration<double, std::nano>(std::chrono::steady_clock::now() - start).count();
      ++out.plans;
      activate_at = t + latency;
      next_plan = t + latency;
    }
    const DmpState next = dmp_step(active, s, params.dt);
    // Touchdown when the canonical phase passes a multiple of 2 pi.
    if (std::floor(next.phi / (2.0 * kPi)) > std::floor(s.phi / (2.0 * kPi))) {
      out.errors.push_back(std::fabs(s.y - target));
    }
    s = next;
  }
  if (out.plans > 0) out.plan_ms = plan_ns * 1e-6 / static_cast<double>(out.plans);
  summarize(out);
  return out;
}

std::vector<ComparisonRow> compare_footstep(const FootstepParams& params, const KinematicChain& leg,
                                            const PhasePortrait& portrait, const ComparisonOptions& options) {
  std::vector<ComparisonRow> rows;
  const PlacementResult ppmp = run_footstep_ppmp(params, leg, portrait, options.stiffness, options.shift);
  rows.push_back({"ppmp", 0, 1.0 / params.dt, ppmp.mean_error, ppmp.max_error, ppmp.plan_ms});
  const PeriodicDmp dmp = footstep_dmp(params, options.dmp_basis);
  for (int b : options.budgets) {
    if (b < 1) throw ConfigError("compare_footstep: budgets must be >= 1");
    const PlacementResult r = run_footstep_dmp(params, dmp, b, options.replan, options.seed);
    rows.push_back({"dmp", b, params.dmp_update_rate / b, r.mean_error, r.max_error, r.plan_ms});
  }
  return rows;
}

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows) {
  os << "method,budget,replan_hz,mean_err,max_err,plan_ms\n";
  os.precision(9);
  for (const ComparisonRow& r : rows) {
    os << r.method << ',' << r.budget << ',' << r.replan_hz << ',' << r.mean_err << ',' << r.max_err << ','
       << r.plan_ms << '\n';
  }
}

int budget_for_rate(const FootstepParams& params, double hz) {
  if (!(hz > 0.0)) throw ConfigError("budget_for_rate: rate must be positive");
  return std::max(1, static_cast<int>(std::lround(params.dmp_update_rate / hz)));
}

const ComparisonRow* matched_dmp_row(const std::vector<ComparisonRow>& rows, double error) {
  const ComparisonRow* match = nullptr;
  const ComparisonRow* best = nullptr;
  for (const ComparisonRow& r : rows) {
    if (r.method != "dmp") continue;
    if (r.mean_err <= error && (!match || r.budget < match->budget)) match = &r;
    if (!best || r.mean_err < best->mean_err) best = &r;
  }
  return match ? match : best;
}

}  // namespace ppmp
