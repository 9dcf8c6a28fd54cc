#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gen.hpp"
#include "ppmp/error.hpp"
#include "ppmp/io.hpp"
#include "ppmp/policy_search.hpp"

using namespace ppmp;

namespace {

FunctionTask bowl(const Eigen::VectorXd& center) {
  return FunctionTask([center](const Eigen::VectorXd& w) { return (w - center).squaredNorm(); });
}

SearchConfig bowl_config(int dim, double sigma, int updates) {
  SearchConfig c;
  c.noise_variance = Eigen::VectorXd::Constant(dim, sigma * sigma);
  c.updates = updates;
  c.seed = 7;
  return c;
}

Eigen::VectorXd unit_start(int dim) {
  Eigen::VectorXd w = Eigen::VectorXd::Ones(dim);
  return w / w.norm();
}

}  // namespace

TEST_CASE("perturb examples") {
  std::mt19937_64 a(5), b(5);
  const Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(4, 0, 3);
  const Perturbation zero = perturb(w, Eigen::VectorXd::Zero(4), a);
  CHECK(zero.weights == w);
  CHECK(zero.epsilon.isZero(0.0));
  const Perturbation p = perturb(w, Eigen::VectorXd::Ones(4), a);
  perturb(w, Eigen::VectorXd::Zero(4), b);
  const Perturbation q = perturb(w, Eigen::VectorXd::Ones(4), b);
  CHECK(p.epsilon == q.epsilon);
  CHECK(p.weights == w + p.epsilon);
}

TEST_CASE("perturb sample covariance within 5% of sigma^2 I") {
  std::mt19937_64 rng(9);
  const int dim = 3;
  const double var = 0.49;
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(dim, dim);
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd e = perturb(Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Constant(dim, var), rng).epsilon;
    s += e * e.transpose();
  }
  s /= n;
  for (int i = 0; i < dim; ++i) {
    CHECK(std::fabs(s(i, i) - var) < 0.05 * var);
    for (int j = 0; j < dim; ++j) {
      if (i != j) CHECK(std::fabs(s(i, j)) < 0.05 * var);
    }
  }
}

TEST_CASE("probability weight examples") {
  const std::vector<double> equal{3.0, 3.0, 3.0, 3.0};
  const Eigen::VectorXd p = probability_weights(equal, 10.0);
  for (int i = 0; i < 4; ++i) CHECK(p[i] == doctest::Approx(0.25));
  CHECK(probability_weights(std::vector<double>{42.0}, 10.0)[0] == 1.0);

  const Eigen::VectorXd two = probability_weights(std::vector<double>{0.0, 1.0}, 10.0);
  const double e = std::exp(-10.0);
  CHECK(two[0] == doctest::Approx(1.0 / (1.0 + e)).epsilon(1e-14));
  CHECK(two[1] == doctest::Approx(e / (1.0 + e)).epsilon(1e-12));
  CHECK(two[1] == doctest::Approx(4.54e-5).epsilon(1e-3));
}

TEST_CASE("property: probability weights form a distribution and favour cheaper rollouts") {
  gen::for_all(51, 1000, [](gen::Rng& r, int) {
    const int n = r.integer(1, 30);
    std::vector<double> c(static_cast<std::size_t>(n));
    for (double& x : c) x = r.uniform(-1e3, 1e3);
    const double lambda = r.uniform(0.1, 50);
    const Eigen::VectorXd p = probability_weights(c, lambda);
    CHECK((p.array() >= 0.0).all());
    CHECK(std::fabs(p.sum() - 1.0) <= 1e-12);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (c[i] < c[j]) CHECK(p[i] >= p[j]);
  });
}

TEST_CASE("update examples") {
  const Eigen::VectorXd w = Eigen::VectorXd::Constant(3, 1.0);
  SUBCASE("single rollout takes its whole step") {
    const std::vector<RolloutRecord> rec{{Eigen::Vector3d(0.1, -0.2, 0.3), 99.0, false}};
    CHECK(update_weights(w, rec, 10.0).isApprox(w + rec[0].epsilon, 1e-15));
  }
  SUBCASE("equal costs average the noise") {
    const std::vector<RolloutRecord> rec{{Eigen::Vector3d(1, 0, 0), 2.0, false},
                                         {Eigen::Vector3d(0, 1, 0), 2.0, false}};
    CHECK(update_weights(w, rec, 10.0).isApprox(w + Eigen::Vector3d(0.5, 0.5, 0), 1e-15));
  }
  SUBCASE("large lambda keeps the cheaper zero-noise rollout") {
    const std::vector<RolloutRecord> rec{{Eigen::Vector3d::Zero(), 0.0, false},
                                         {Eigen::Vector3d(1, 1, 1), 1.0, false}};
    CHECK((update_weights(w, rec, 200.0) - w).norm() < 1e-80);
  }
}

TEST_CASE("property: update step is bounded by the largest perturbation") {
  gen::for_all(52, 500, [](gen::Rng& r, int) {
    const int dim = r.integer(1, 20);
    const int n = r.integer(1, 15);
    std::vector<RolloutRecord> rec;
    double largest = 0.0;
    for (int i = 0; i < n; ++i) {
      rec.push_back({r.normal_vector(dim, r.uniform(0.01, 3)), r.uniform(-5, 5), false});
      largest = std::max(largest, rec.back().epsilon.norm());
    }
    const Eigen::VectorXd w = r.normal_vector(dim);
    CHECK((update_weights(w, rec, r.uniform(0.5, 30)) - w).norm() <= largest * (1 + 1e-12));
  });
}

TEST_CASE("training with zero updates returns the initial weights") {
  const Eigen::VectorXd w0 = unit_start(6);
  const TrainingResult r = run_training(bowl(Eigen::VectorXd::Zero(6)), w0, bowl_config(6, 0.1, 0));
  CHECK(r.weights == w0);
  CHECK(r.clean_costs.size() == 1);
  CHECK(r.clean_costs[0] == doctest::Approx(1.0));
}

TEST_CASE("property: zero noise is a fixed point") {
  gen::for_all(53, 20, [](gen::Rng& r, int) {
    const int dim = r.integer(1, 12);
    const Eigen::VectorXd w0 = r.normal_vector(dim);
    SearchConfig c = bowl_config(dim, 0.0, r.integer(1, 6));
    c.rollouts_per_update = r.integer(1, 8);
    CHECK(run_training(bowl(r.normal_vector(dim)), w0, c).weights == w0);
  });
}

TEST_CASE("quadratic bowl: non-increasing trend over 20 updates") {
  const TrainingResult r = run_training(bowl(Eigen::VectorXd::Zero(20)), unit_start(20), bowl_config(20, 0.05, 20));
  CHECK(r.clean_costs.size() == 20);
  CHECK(trend_slope(r.clean_costs) <= 0.0);
}

TEST_CASE("quadratic bowl: >= 90% reduction within 50 updates") {
  const TrainingResult r = run_training(bowl(Eigen::VectorXd::Zero(20)), unit_start(20), bowl_config(20, 0.05, 50));
  CHECK(r.final_cost <= 0.1 * r.clean_costs.front());
}

TEST_CASE("staged protocol logs one clean evaluation per update") {
  SearchConfig c = bowl_config(4, 0.1, 0);
  c.schedule = {{10, 10}, {7, 5}};
  const TrainingResult r = run_training(bowl(Eigen::VectorXd::Zero(4)), unit_start(4), c);
  CHECK(r.clean_costs.size() == 17);
  CHECK(r.snapshots.size() == 17);
  CHECK(r.log.size() == 17 + 10 * 10 + 7 * 5);
}

TEST_CASE("failed rollouts are penalised, not fatal") {
  FunctionTask flaky([](const Eigen::VectorXd& w) { return w[0] > 0.5 ? std::nan("") : w.squaredNorm(); });
  SearchConfig c = bowl_config(2, 0.5, 5);
  c.failure_penalty = 1e3;
  const TrainingResult r = run_training(flaky, Eigen::Vector2d(0.4, 0.4), c);
  CHECK(r.failed_rollouts > 0);
  bool penalised = false;
  for (const TrainingLogEntry& e : r.log) penalised = penalised || (e.failed && e.cost == 1e3);
  CHECK(penalised);
}

TEST_CASE("parallel rollouts give identical results") {
  SearchConfig c = bowl_config(10, 0.2, 8);
  const FunctionTask task = bowl(Eigen::VectorXd::LinSpaced(10, -1, 1));
  const TrainingResult a = run_training(task, unit_start(10), c);
  c.parallel = 4;
  const TrainingResult b = run_training(task, unit_start(10), c);
  CHECK(a.weights == b.weights);
  CHECK(a.clean_costs == b.clean_costs);
}

TEST_CASE("config validation") {
  SearchConfig c = bowl_config(3, 0.1, 2);
  CHECK_THROWS_AS(c.validate(4), ConfigError);
  c.lambda = 0.0;
  CHECK_THROWS_AS(c.validate(3), ConfigError);
}

TEST_CASE("trend slope and log file") {
  CHECK(trend_slope(std::vector<double>{3, 2, 1}) == doctest::Approx(-1.0));
  CHECK(trend_slope(std::vector<double>{5}) == 0.0);
  const auto path = std::filesystem::temp_directory_path() / "ppmp_test_log.csv";
  write_training_log(path, std::vector<TrainingLogEntry>{{0, 0, RolloutKind::clean, 1.5, false},
                                                         {0, 1, RolloutKind::explore, 2.0, true}});
  CHECK(io::read_file(path) == "update,rollout,kind,cost\n0,0,clean,1.5\n0,1,explore,2\n");
}
