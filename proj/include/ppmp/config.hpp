#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppmp/compare.hpp"
#include "ppmp/kinematics.hpp"
#include "ppmp/policy_search.hpp"
#include "ppmp/tasks/ball.hpp"
#include "ppmp/tasks/footstep.hpp"
#include "ppmp/tasks/handover.hpp"

namespace ppmp {

enum class TaskKind { ball, handover, footstep };

std::string_view to_string(TaskKind kind);
TaskKind task_kind_from_string(std::string_view text);

struct DemoSettings {
  int count = 5;
  double dt = 0.01;
  // Handover only: "empty" or "full" cup settle time.
  std::string handover_load = "empty";
};

struct FitSettings {
  double regularization = 1e-6;
};

struct PolicySettings {
  int basis_count = 10;
  double width_factor = 1.0;
  double init_stiffness = 30.0;
  double init_shift_deg = 45.0;
};

struct TrainSettings {
  int rollouts = 10;
  int updates = 10;
  double noise_std_stiffness = 10.0;
  double noise_std_shift = 0.5;
  double lambda = 10.0;
  double noise_decay = 0.95;
  double failure_penalty = 1e3;
  std::vector<SearchStage> schedule;
};

struct BallEvalSettings {
  // Peak excursion above rest that counts a push as successful. Zero: half of
  // the demonstrated ball range.
  double success_excursion = 0.0;
  double smoothing = 0.5;
};

struct HandoverEvalSettings {
  double shift_deg = -65.0;
  std::vector<double> stiffness{30.0, 20.0};
};

// Every physical constant and tunable of a run; loaded from one JSON file in
// which each section is optional and unknown keys are rejected.
struct TaskConfig {
  TaskKind task = TaskKind::ball;
  std::uint64_t seed = 1;
  DualArm arm = DualArm::desk();
  DemoSettings demo;
  AugmentOptions augment;
  FitSettings fit;
  PolicySettings policy;
  TrainSettings train;
  BallParams ball;
  BallExpert expert;
  CostSpec cost;
  BallEvalSettings ball_eval;
  HandoverParams handover;
  HandoverEvalSettings handover_eval;
  FootstepParams footstep;
  ComparisonOptions compare;

  void validate() const;
  [[nodiscard]] PhaseMode mode() const;
  [[nodiscard]] RbfBasis basis() const;
  [[nodiscard]] CouplingPolicy initial_policy() const;
  [[nodiscard]] SearchConfig search_config(int parallel) const;
  // Augmentation options with the task's effector gain filled in.
  [[nodiscard]] AugmentOptions augment_options() const;
  [[nodiscard]] FitOptions fit_options() const;
  // Ball roll-out options; a zero success_excursion takes half the
  // demonstrated ball range from the portrait's target plane.
  [[nodiscard]] BallRunOptions ball_options(const PhasePortrait& portrait) const;
  // Giver duration of the partner for the configured cup load.
  [[nodiscard]] double handover_giver_duration() const;
};

TaskConfig config_from_json(const nlohmann::json& doc, const std::string& source = "config");
nlohmann::json config_to_json(const TaskConfig& config);
TaskConfig load_config(const std::filesystem::path& path);

}  // namespace ppmp
