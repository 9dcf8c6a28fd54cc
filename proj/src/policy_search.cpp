#include "ppmp/policy_search.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "ppmp/error.hpp"
#include "ppmp/io.hpp"
#include "ppmp/kernels/kernels.hpp"

namespace ppmp {

std::vector<SearchStage> SearchConfig::stages() const {
  if (!schedule.empty()) return schedule;
  return {SearchStage{updates, rollouts_per_update}};
}

void SearchConfig::validate(Eigen::Index dimension) const {
  if (noise_variance.size() != dimension) {
    throw ConfigError("noise covariance has " + std::to_string(noise_variance.size()) +
                      " entries, expected " + std::to_string(dimension));
  }
  if ((noise_variance.array() < 0.0).any() || !noise_variance.allFinite()) {
    throw ConfigError("noise variances must be finite and non-negative");
  }
  if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
  if (!(noise_decay > 0.0 && noise_decay <= 1.0)) throw ConfigError("noise_decay must lie in (0, 1]");
  if (parallel < 1) throw ConfigError("parallel must be >= 1");
  for (const auto& s : stages()) {
    if (s.updates < 0) throw ConfigError("number of updates must be >= 0");
    if (s.rollouts < 1) throw ConfigError("roll-outs per update must be >= 1");
  }
}

Perturbation perturb(const Eigen::VectorXd& w, const Eigen::VectorXd& noise_variance,
                     std::mt19937_64& rng) {
  if (w.size() != noise_variance.size()) throw ConfigError("perturb: dimension mismatch");
  std::normal_distribution<double> normal(0.0, 1.0);
  Perturbation p;
  p.epsilon.resize(w.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    p.epsilon[i] = std::sqrt(noise_variance[i]) * normal(rng);
  }
  p.weights = w + p.epsilon;
  return p;
}

Eigen::VectorXd probability_weights(std::span<const double> costs, double lambda) {
  if (costs.empty()) throw ConfigError("probability_weights: no costs");
  const auto [lo, hi] = std::minmax_element(costs.begin(), costs.end());
  const double range = *hi - *lo;
  Eigen::VectorXd p(static_cast<Eigen::Index>(costs.size()));
  for (std::size_t r = 0; r < costs.size(); ++r) {
    const double normalized = range > 0.0 ? (costs[r] - *lo) / range : 0.0;
    p[static_cast<Eigen::Index>(r)] = std::exp(-lambda * normalized);
  }
  return p / p.sum();
}

Eigen::VectorXd update_weights(const Eigen::VectorXd& w, std::span<const RolloutRecord> records,
                               double lambda) {
  if (records.empty()) throw ConfigError("update_weights: no roll-outs");
  std::vector<double> costs;
  costs.reserve(records.size());
  for (const auto& r : records) costs.push_back(r.cost);
  const Eigen::VectorXd p = probability_weights(costs, lambda);
  Eigen::VectorXd out = w;
  const auto n = static_cast<std::size_t>(w.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].epsilon.size() != w.size()) throw ConfigError("update_weights: dimension mismatch");
    kernels::axpy({out.data(), n}, {records[r].epsilon.data(), n}, p[static_cast<Eigen::Index>(r)]);
  }
  return out;
}

std::string_view to_string(RolloutKind kind) {
  return kind == RolloutKind::clean ? "clean" : "explore";
}

namespace {

struct Evaluation {
  double cost;
  bool failed;
};

Evaluation evaluate(const EpisodicTask& task, const Eigen::VectorXd& w, double penalty) {
  try {
    const double c = task.rollout(w);
    if (std::isfinite(c)) return {c, false};
  } catch (const NumericError&) {
  }
  return {penalty, true};
}

std::vector<Evaluation> evaluate_batch(const EpisodicTask& task,
                                       const std::vector<Eigen::VectorXd>& batch, double penalty,
                                       int parallel) {
  std::vector<Evaluation> out(batch.size());
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(parallel), batch.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < batch.size(); ++i) out[i] = evaluate(task, batch[i], penalty);
    return out;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t k = 0; k < workers; ++k) {
    threads.emplace_back([&, k] {
      try {
        for (std::size_t i = k; i < batch.size(); i += workers) {
          out[i] = evaluate(task, batch[i], penalty);
        }
      } catch (...) {
        errors[k] = std::current_exception();
      }
    });
  }
  for (auto& t : threads) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

}  // namespace

TrainingResult run_training(const EpisodicTask& task, const Eigen::VectorXd& initial,
                            const SearchConfig& config) {
  config.validate(initial.size());
  std::mt19937_64 rng(config.seed);
  Eigen::VectorXd noise = config.noise_variance;

  TrainingResult result;
  result.weights = initial;
  int update = 0;
  for (const SearchStage& stage : config.stages()) {
    for (int u = 0; u < stage.updates; ++u, ++update) {
      const Evaluation clean = evaluate(task, result.weights, config.failure_penalty);
      result.clean_costs.push_back(clean.cost);
      result.log.push_back({update, 0, RolloutKind::clean, clean.cost, clean.failed});
      result.failed_rollouts += clean.failed ? 1 : 0;

      std::vector<Eigen::VectorXd> batch;
      std::vector<RolloutRecord> records(static_cast<std::size_t>(stage.rollouts));
      for (auto& rec : records) {
        Perturbation p = perturb(result.weights, noise, rng);
        rec.epsilon = std::move(p.epsilon);
        batch.push_back(std::move(p.weights));
      }
      const auto evals = evaluate_batch(task, batch, config.failure_penalty, config.parallel);
      for (std::size_t r = 0; r < records.size(); ++r) {
        records[r].cost = evals[r].cost;
        records[r].failed = evals[r].failed;
        result.failed_rollouts += evals[r].failed ? 1 : 0;
        result.log.push_back({update, static_cast<int>(r) + 1, RolloutKind::explore, evals[r].cost,
                              evals[r].failed});
      }
      result.weights = update_weights(result.weights, records, config.lambda);
      result.snapshots.push_back(result.weights);
      noise *= config.noise_decay;
    }
  }

  const Evaluation final_eval = evaluate(task, result.weights, config.failure_penalty);
  result.final_cost = final_eval.cost;
  if (update == 0) {
    result.clean_costs.push_back(final_eval.cost);
    result.log.push_back({0, 0, RolloutKind::clean, final_eval.cost, final_eval.failed});
    result.failed_rollouts += final_eval.failed ? 1 : 0;
  }
  return result;
}

double trend_slope(std::span<const double> costs) {
  const auto n = static_cast<double>(costs.size());
  if (costs.size() < 2) return 0.0;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    mx += static_cast<double>(i);
    my += costs[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) {
    const double dx = static_cast<double>(i) - mx;
    sxy += dx * (costs[i] - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

void write_training_log(const std::filesystem::path& path, std::span<const TrainingLogEntry> log) {
  std::ostringstream out;
  out << "update,rollout,kind,cost\n";
  for (const auto& e : log) {
    out << e.update << ',' << e.rollout << ',' << to_string(e.kind) << ','
        << io::format_double(e.cost) << '\n';
  }
  io::write_file(path, out.str());
}

}  // namespace ppmp
