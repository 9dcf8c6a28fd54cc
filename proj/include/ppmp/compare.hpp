#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "ppmp/dmp.hpp"
#include "ppmp/tasks/footstep.hpp"

namespace ppmp {

// Lateral-coordinate DMP fitted to the nominal foot cycle.
PeriodicDmp footstep_dmp(const FootstepParams& params, int basis_count = 20);

// DMP placement under a planning budget. A plan of `budget` updates takes
// budget / dmp_update_rate seconds: it starts from the fitted weights, uses the
// state and target seen when it starts and becomes active when it completes.
// The next plan starts immediately. Budget 0 never replans.
PlacementResult run_footstep_dmp(const FootstepParams& params, const PeriodicDmp& dmp, int budget,
                                 const ReplanConfig& config, std::uint64_t seed);

struct ComparisonRow {
  std::string method;
  int budget = 0;
  double replan_hz = 0.0;
  double mean_err = 0.0;
  double max_err = 0.0;
  double plan_ms = 0.0;
};

struct ComparisonOptions {
  std::vector<int> budgets{1, 2, 3, 5, 10, 20};
  double stiffness = 30.0;
  double shift = 0.0;
  int dmp_basis = 20;
  ReplanConfig replan;
  std::uint64_t seed = 1;
};

// First row is PPMP (budget 0, replanning every tick), then one DMP row per budget.
std::vector<ComparisonRow> compare_footstep(const FootstepParams& params, const KinematicChain& leg,
                                            const PhasePortrait& portrait, const ComparisonOptions& options);

void write_comparison_csv(std::ostream& os, const std::vector<ComparisonRow>& rows);

// Budget that plans at `hz` under the configured update rate.
int budget_for_rate(const FootstepParams& params, double hz);

// DMP row with the smallest budget whose mean error is at most `error`;
// falls back to the lowest-error DMP row. Returns nullptr without DMP rows.
const ComparisonRow* matched_dmp_row(const std::vector<ComparisonRow>& rows, double error);

}  // namespace ppmp
