#pragma once

#include <Eigen/Dense>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ppmp/config.hpp"
#include "ppmp/coupling.hpp"
#include "ppmp/portrait.hpp"
#include "ppmp/tasks/ball.hpp"
#include "ppmp/tasks/handover.hpp"

namespace ppmp {

inline constexpr int kProtocolVersion = 1;

struct StateFrame {
  long tick = 0;
  double t = 0.0;
  double phi_t = 0.0;
  double phi_r = 0.0;
  double stiffness = 0.0;
  double shift = 0.0;
  std::string task;
  bool grabbed = false;
  std::vector<double> target;
  std::vector<double> hands;
  std::vector<double> q;
  double cost = 0.0;
};

nlohmann::json frame_to_json(const StateFrame& frame);
StateFrame frame_from_json(const nlohmann::json& doc);
nlohmann::json error_frame(long tick, const std::string& reason);

enum class ControlKind { grab_target, move_target, release_target, switch_task, set_coupling, reset };

std::string_view to_string(ControlKind kind);

// `tick` is the simulation tick the message applies to; messages without one
// apply at the next tick. Payloads:
//   move_target {position: [x, y]}, switch_task {task}, set_coupling {K, alpha}
//   (an empty set_coupling payload restores the policy).
struct ControlMessage {
  ControlKind kind = ControlKind::reset;
  std::optional<long> tick;
  nlohmann::json payload = nlohmann::json::object();
};

// Throws ParseError naming the offending field.
ControlMessage parse_control_message(const nlohmann::json& doc);
ControlMessage parse_control_message(std::string_view text);
inline ControlMessage parse_control_message(const char* text) { return parse_control_message(std::string_view(text)); }
nlohmann::json control_to_json(const ControlMessage& m);

struct Workspace {
  double x_min = -0.6;
  double x_max = 0.6;
  double y_min = 0.0;
  double y_max = 1.0;
  [[nodiscard]] bool contains(double x, double y) const {
    return x >= x_min && x <= x_max && y >= y_min && y <= y_max;
  }
};

struct TaskAssets {
  PhasePortrait portrait;
  CouplingPolicy policy;
};

// Release velocity: least-squares slope of the last (up to) five positions.
double release_velocity(const std::deque<std::pair<double, double>>& samples);

// Authoritative simulation for the interactive bridge. Messages are queued
// from any thread and applied in (tick, arrival) order when their tick is
// simulated, so a replayed timeline always produces the same frames.
class BridgeCore {
 public:
  BridgeCore(TaskConfig config, std::map<TaskKind, TaskAssets> assets, TaskKind initial);

  // Validates and queues; returns the rejection reason instead when invalid.
  std::optional<std::string> enqueue(const ControlMessage& message);

  struct Step {
    StateFrame frame;
    std::vector<nlohmann::json> errors;
  };
  Step step();

  [[nodiscard]] long tick() const { return tick_; }
  [[nodiscard]] TaskKind task() const { return task_; }
  [[nodiscard]] Workspace workspace() const;
  [[nodiscard]] double dt() const;

 private:
  void rebuild();
  std::optional<std::string> check(const ControlMessage& m) const;
  std::optional<std::string> apply(const ControlMessage& m);
  StateFrame frame() const;

  TaskConfig config_;
  std::map<TaskKind, TaskAssets> assets_;
  TaskKind task_;
  std::unique_ptr<BallSession> ball_;
  std::unique_ptr<HandoverSession> handover_;
  Eigen::Vector2d partner_ = Eigen::Vector2d::Zero();
  bool grabbed_ = false;
  std::optional<Coupling> override_;
  std::deque<std::pair<double, double>> drag_;  // (t, y) while grabbed
  long tick_ = 0;
  std::uint64_t arrivals_ = 0;

  mutable std::mutex mutex_;
  std::multimap<std::pair<long, std::uint64_t>, ControlMessage> queue_;
};

struct ReplayResult {
  std::vector<BridgeCore::Step> steps;
  std::vector<nlohmann::json> rejected;
};

// Offline replay: queues the whole message timeline, then runs `ticks` steps.
ReplayResult replay(BridgeCore& core, const std::vector<ControlMessage>& messages, long ticks);

}  // namespace ppmp
