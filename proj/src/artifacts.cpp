#include "ppmp/artifacts.hpp"

#include <sstream>

#include "ppmp/error.hpp"
#include "ppmp/io.hpp"

namespace ppmp {

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.push_back({path.generic_string(), io::git_blob_hash(io::read_file(path))});
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json in = nlohmann::json::array();
  for (const Input& i : inputs) in.push_back({{"path", i.path}, {"hash", i.hash}});
  return {{"command", command},
          {"seed", seed},
          {"out", out_dir},
          {"config", {{"path", config_path}, {"hash", config_hash}, {"resolved", config}}},
          {"inputs", in}};
}

RunManifest make_manifest(const std::string& command, const TaskConfig& config,
                          const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
  RunManifest m;
  m.command = command;
  m.out_dir = out_dir.generic_string();
  m.seed = config.seed;
  m.config = config_to_json(config);
  if (!config_path.empty()) {
    m.config_path = config_path.generic_string();
    m.config_hash = io::git_blob_hash(io::read_file(config_path));
  } else {
    m.config_hash = io::git_blob_hash(m.config.dump());
  }
  return m;
}

namespace {

void header(std::ostringstream& os, Eigen::Index dof) {
  os << "t,phi_target,phi_robot,K,alpha,y_ball,y_left,y_right";
  for (Eigen::Index j = 0; j < dof; ++j) os << ",q" << j;
  os << ",c_t\n";
}

void row(std::ostringstream& os, std::initializer_list<double> head, const Eigen::VectorXd& q, double cost) {
  bool first = true;
  for (double v : head) {
    if (!first) os << ',';
    os << io::format_double(v);
    first = false;
  }
  for (Eigen::Index j = 0; j < q.size(); ++j) os << ',' << io::format_double(q[j]);
  os << ',' << io::format_double(cost) << '\n';
}

}  // namespace

void write_trajectory_csv(const std::filesystem::path& path, std::span<const TrajectoryRow> rows) {
  if (rows.empty()) throw ConfigError("trajectory: no rows to write");
  std::ostringstream os;
  header(os, rows.front().q.size());
  for (const TrajectoryRow& r : rows) {
    row(os, {r.t, r.phi_target, r.phi_robot, r.stiffness, r.shift, r.y_ball, r.y_left, r.y_right}, r.q, r.cost);
  }
  io::write_file(path, os.str());
}

void write_trajectory_csv(const std::filesystem::path& path, std::span<const HandoverRow> rows) {
  if (rows.empty()) throw ConfigError("trajectory: no rows to write");
  std::ostringstream os;
  header(os, rows.front().q.size());
  for (const HandoverRow& r : rows) {
    row(os, {r.t, r.phi_target, r.phi_robot, r.stiffness, r.shift, r.target[1], r.hands[1], r.hands[3]}, r.q, 0.0);
  }
  io::write_file(path, os.str());
}

}  // namespace ppmp
