#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "ppmp/config.hpp"
#include "ppmp/tasks/ball.hpp"
#include "ppmp/tasks/handover.hpp"

namespace ppmp {

// Provenance record written next to every artifact and embedded in JSON ones.
struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string config_path;
  std::string config_hash;
  // Resolved configuration actually used (defaults filled in).
  nlohmann::json config;
  struct Input {
    std::string path;
    std::string hash;
  };
  std::vector<Input> inputs;

  void add_input(const std::filesystem::path& path);
  [[nodiscard]] nlohmann::json to_json() const;
};

RunManifest make_manifest(const std::string& command, const TaskConfig& config,
                          const std::filesystem::path& config_path, const std::filesystem::path& out_dir);

// Header `t,phi_target,phi_robot,K,alpha,y_ball,y_left,y_right,q0..,c_t`.
void write_trajectory_csv(const std::filesystem::path& path, std::span<const TrajectoryRow> rows);
// Handover rows in the same layout: y_ball holds the partner hand y, c_t is 0.
void write_trajectory_csv(const std::filesystem::path& path, std::span<const HandoverRow> rows);

}  // namespace ppmp
