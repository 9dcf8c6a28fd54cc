#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "gen.hpp"
#include "ppmp/compare.hpp"
#include "ppmp/error.hpp"

using namespace ppmp;

namespace {

std::vector<double> sinusoid(int n, double amplitude, double offset) {
  std::vector<double> y(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) y[static_cast<std::size_t>(k)] = offset + amplitude * std::sin(2 * kPi * k / n);
  return y;
}

// Short schedule shared by the comparison cases.
FootstepParams short_world() {
  FootstepParams p;
  p.duration = 4.0;
  return p;
}

struct FootstepSetup {
  FootstepParams params;
  KinematicChain leg;
  PhasePortrait portrait;
};

FootstepSetup make_footstep() {
  const FootstepParams p = short_world();
  const KinematicChain leg = footstep_leg(p);
  FitOptions o;
  o.mode = PhaseMode::cyclic;
  o.progress_dim = 0;
  o.target_progress_dim = 0;
  o.effector = [leg](const Eigen::VectorXd& q) { return leg.forward(q); };
  return {p, leg, fit_portrait(synth_footstep_demos(p, leg, 20, 3), o)};
}

const FootstepSetup& footstep() {
  static const FootstepSetup s = make_footstep();
  return s;
}

}  // namespace

TEST_CASE("zero forcing weights decay to the goal") {
  PeriodicDmp d;
  d.goal = 0.3;
  d.weights = Eigen::VectorXd::Zero(8);
  const Eigen::VectorXd y = dmp_rollout(d, {1.5, -2.0, 0.0}, 1e-3, 5000);
  CHECK(std::fabs(y[y.size() - 1] - 0.3) < 1e-9);
}

TEST_CASE("fixed weights give a periodic output after the transient") {
  const PeriodicDmp d = footstep_dmp(FootstepParams{});
  const int n = 800;  // one period at dt = 1e-3
  const Eigen::VectorXd y = dmp_rollout(d, {0.0, 0.0, 0.0}, 1e-3, 6 * n);
  double dev = 0.0;
  for (int k = 4 * n; k < 5 * n; ++k) dev = std::max(dev, std::fabs(y[k + n] - y[k]));
  CHECK(dev <= 1e-6);
}

TEST_CASE("regression fit reproduces a known sinusoid") {
  gen::for_all(81, 20, [](gen::Rng& r, int) {
    const int n = r.integer(200, 1000);
    const double dt = 1e-3;
    const double amp = r.uniform(0.01, 0.5);
    const std::vector<double> y = sinusoid(n, amp, r.uniform(-1, 1));
    const PeriodicDmp d = fit_periodic_dmp(y, dt, 20);
    const Eigen::VectorXd out = dmp_rollout(d, dmp_cycle_state(d, y, dt, 0), dt, 3 * n);
    double err = 0.0;
    for (int k = 0; k < n; ++k) err = std::max(err, std::fabs(out[2 * n + k] - y[static_cast<std::size_t>(k)]));
    CHECK(err <= 0.02 * amp);
  });
}

TEST_CASE("phase advances exactly dt / tau per step") {
  gen::for_all(82, 500, [](gen::Rng& r, int) {
    PeriodicDmp d;
    d.tau = r.uniform(0.05, 2.0);
    d.weights = r.normal_vector(5);
    const DmpState s{r.normal(), r.normal(), r.uniform(0, 100)};
    const double dt = r.uniform(1e-4, 1e-2);
    CHECK(dmp_step(d, s, dt).phi == s.phi + dt / d.tau);
  });
}

TEST_CASE("fit rejects short cycles and bad parameters") {
  CHECK_THROWS_AS(fit_periodic_dmp(std::vector<double>{1, 2, 3}, 1e-3, 5), ConfigError);
  CHECK_THROWS_AS(fit_periodic_dmp(sinusoid(50, 1, 0), 0.0, 5), ConfigError);
  PeriodicDmp d;
  CHECK_THROWS_AS(d.validate(), ConfigError);
}

TEST_CASE("replan") {
  const FootstepParams p;
  const PeriodicDmp d = footstep_dmp(p);
  ReplanRequest req;
  req.state = {p.foot(p.target_mean, 0.0)[0], 0.0, 0.0};
  req.touchdown_phi = 2 * kPi;
  const double nominal = dmp_touchdown(d, req);
  req.target = nominal + 0.03;

  SUBCASE("budget 0 leaves the dmp unchanged") {
    const PeriodicDmp same = dmp_replan(d, req, 0, {}, 1);
    CHECK(same.weights == d.weights);
    CHECK(same.goal == d.goal);
    CHECK(same.tau == d.tau);
  }
  SUBCASE("a large budget on a stationary target lands within 1% of the step width") {
    const PeriodicDmp tuned = dmp_replan(d, req, 100, {}, 1);
    CHECK(std::fabs(dmp_touchdown(tuned, req) - req.target) < 0.01 * p.target_mean);
  }
  SUBCASE("error does not grow with the budget, averaged over 10 seeds") {
    const std::vector<int> budgets{1, 2, 5, 10, 20};
    const int seeds = 10;
    Eigen::MatrixXd err(seeds, static_cast<Eigen::Index>(budgets.size()));
    for (int i = 0; i < seeds; ++i) {
      for (std::size_t b = 0; b < budgets.size(); ++b) {
        const PeriodicDmp tuned = dmp_replan(d, req, budgets[b], {}, static_cast<std::uint64_t>(i + 1));
        err(i, static_cast<Eigen::Index>(b)) = std::fabs(dmp_touchdown(tuned, req) - req.target);
      }
    }
    // Once converged the per-seed errors sit on the exploration noise floor,
    // so a step may rise by at most two standard errors of the paired difference.
    for (Eigen::Index b = 1; b < err.cols(); ++b) {
      const Eigen::VectorXd diff = err.col(b) - err.col(b - 1);
      const double mean = diff.mean();
      const double se = std::sqrt((diff.array() - mean).square().sum() / (seeds - 1) / seeds);
      CAPTURE(budgets[static_cast<std::size_t>(b)]);
      CAPTURE(mean);
      CAPTURE(se);
      CHECK(mean <= 2.0 * se);
    }
    CHECK(err.col(err.cols() - 1).mean() < 0.1 * err.col(0).mean());
  }
  SUBCASE("touchdown in the past is rejected") {
    ReplanRequest bad = req;
    bad.state.phi = 7.0;
    CHECK_THROWS_AS(dmp_touchdown(d, bad), ConfigError);
  }
}

TEST_CASE("footstep comparison") {
  const FootstepSetup& s = footstep();
  ComparisonOptions o;
  o.budgets = {1, 3};
  const std::vector<ComparisonRow> a = compare_footstep(s.params, s.leg, s.portrait, o);
  REQUIRE(a.size() == 3);
  CHECK(a[0].method == "ppmp");

  SUBCASE("ppmp plans faster than the dmp at every budget") {
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a[0].plan_ms < a[i].plan_ms);
  }
  SUBCASE("deterministic apart from wall time") {
    const std::vector<ComparisonRow> b = compare_footstep(s.params, s.leg, s.portrait, o);
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].method == b[i].method);
      CHECK(a[i].budget == b[i].budget);
      CHECK(a[i].replan_hz == b[i].replan_hz);
      CHECK(a[i].mean_err == b[i].mean_err);
      CHECK(a[i].max_err == b[i].max_err);
    }
  }
  SUBCASE("both planners read a bitwise-identical target stream") {
    const PlacementResult ppmp = run_footstep_ppmp(s.params, s.leg, s.portrait, 30, 0);
    const PlacementResult dmp = run_footstep_dmp(s.params, footstep_dmp(s.params), 2, {}, 1);
    PlacementResult oracle;
    const auto ticks = std::lround(s.params.duration / s.params.dt);
    for (long k = 0; k <= ticks; ++k) digest_target(oracle, s.params.target(static_cast<double>(k) * s.params.dt));
    CHECK(ppmp.target_digest == oracle.target_digest);
    CHECK(dmp.target_digest == oracle.target_digest);
  }
}

TEST_CASE("budget for rate and matched row") {
  const FootstepParams p;
  CHECK(budget_for_rate(p, 10.0) == 3);
  CHECK(budget_for_rate(p, 1000.0) == 1);
  CHECK_THROWS_AS(budget_for_rate(p, 0.0), ConfigError);
  const std::vector<ComparisonRow> rows{
      {"ppmp", 0, 1000, 0.01, 0.02, 0.001}, {"dmp", 1, 30, 0.03, 0.05, 1}, {"dmp", 3, 10, 0.009, 0.02, 3},
      {"dmp", 5, 6, 0.008, 0.02, 5}};
  CHECK(matched_dmp_row(rows, 0.01)->budget == 3);
  CHECK(matched_dmp_row(rows, 0.001)->budget == 5);
  CHECK(matched_dmp_row({rows[0]}, 0.01) == nullptr);
}

TEST_CASE("comparison csv header") {
  std::ostringstream os;
  write_comparison_csv(os, {{"dmp", 3, 10, 0.5, 1.0, 2.0}});
  CHECK(os.str() == "method,budget,replan_hz,mean_err,max_err,plan_ms\ndmp,3,10,0.5,1,2\n");
}
