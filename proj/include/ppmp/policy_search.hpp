#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace ppmp {

// An episodic task: maps a parameter vector to the scalar cost of one
// roll-out. Implementations must be callable concurrently from several threads.
class EpisodicTask {
 public:
  virtual ~EpisodicTask() = default;
  [[nodiscard]] virtual double rollout(const Eigen::VectorXd& weights) const = 0;
};

class FunctionTask final : public EpisodicTask {
 public:
  explicit FunctionTask(std::function<double(const Eigen::VectorXd&)> fn) : fn_(std::move(fn)) {}
  [[nodiscard]] double rollout(const Eigen::VectorXd& weights) const override { return fn_(weights); }

 private:
  std::function<double(const Eigen::VectorXd&)> fn_;
};

struct SearchStage {
  int updates = 0;
  int rollouts = 10;
};

struct SearchConfig {
  int rollouts_per_update = 10;
  // Diagonal of the exploration covariance (variances, one per weight).
  Eigen::VectorXd noise_variance;
  double lambda = 10.0;
  int updates = 10;
  // Multiplies the exploration covariance after every update.
  double noise_decay = 0.95;
  std::uint64_t seed = 1;
  double failure_penalty = 1e3;
  // Worker threads for exploration roll-outs; 1 runs them inline.
  int parallel = 1;
  // Optional multi-stage protocol; when non-empty it replaces
  // (updates, rollouts_per_update).
  std::vector<SearchStage> schedule;

  [[nodiscard]] std::vector<SearchStage> stages() const;
  void validate(Eigen::Index dimension) const;
};

struct RolloutRecord {
  Eigen::VectorXd epsilon;
  double cost = 0.0;
  bool failed = false;
};

struct Perturbation {
  Eigen::VectorXd weights;
  Eigen::VectorXd epsilon;
};

// w_r = w + eps_r, eps_r ~ N(0, diag(noise_variance)). Draw order: one standard
// normal per dimension, in index order.
Perturbation perturb(const Eigen::VectorXd& w, const Eigen::VectorXd& noise_variance,
                     std::mt19937_64& rng);

// Softmax over min-max normalized costs: P_r = exp(-lambda c_r) / sum exp(-lambda c_r').
Eigen::VectorXd probability_weights(std::span<const double> costs, double lambda);

// w_new = w + sum_r P_r eps_r, summed in record order.
Eigen::VectorXd update_weights(const Eigen::VectorXd& w, std::span<const RolloutRecord> records,
                               double lambda);

enum class RolloutKind { clean, explore };
std::string_view to_string(RolloutKind kind);

struct TrainingLogEntry {
  int update = 0;
  int rollout = 0;
  RolloutKind kind = RolloutKind::clean;
  double cost = 0.0;
  bool failed = false;
};

struct TrainingResult {
  Eigen::VectorXd weights;
  // Clean (noise-free) cost logged at every update, before the update is
  // applied. A run with zero updates logs one clean evaluation.
  std::vector<double> clean_costs;
  // Clean cost of the returned weights.
  double final_cost = 0.0;
  std::vector<TrainingLogEntry> log;
  // Weights after each update.
  std::vector<Eigen::VectorXd> snapshots;
  int failed_rollouts = 0;
};

TrainingResult run_training(const EpisodicTask& task, const Eigen::VectorXd& initial,
                            const SearchConfig& config);

// Least-squares slope of costs against their index.
double trend_slope(std::span<const double> costs);

// CSV `update,rollout,kind,cost`.
void write_training_log(const std::filesystem::path& path, std::span<const TrainingLogEntry> log);

}  // namespace ppmp
