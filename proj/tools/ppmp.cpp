#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <csignal>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "ppmp/artifacts.hpp"
#include "ppmp/bridge.hpp"
#include "ppmp/compare.hpp"
#include "ppmp/config.hpp"
#include "ppmp/error.hpp"
#include "ppmp/io.hpp"
#include "ppmp/portrait_io.hpp"
#include "ppmp/server.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ppmp;

namespace {

struct Common {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

struct Loaded {
  TaskConfig config;
  RunManifest manifest;
  fs::path out;
};

Loaded load(const Common& c, const std::string& command) {
  Loaded l;
  l.config = c.config_path.empty() ? TaskConfig{} : load_config(c.config_path);
  if (c.seed) l.config.seed = *c.seed;
  l.config.validate();
  l.manifest = make_manifest(command, l.config, c.config_path, c.out);
  l.out = c.out;
  fs::create_directories(l.out);
  return l;
}

void write_manifest(const Loaded& l) { io::write_json(l.out / "manifest.json", l.manifest.to_json()); }

std::string demo_name(const std::string& stem, std::size_t i) {
  std::ostringstream os;
  os << stem << '_' << std::string(i < 10 ? "00" : i < 100 ? "0" : "") << i << ".csv";
  return os.str();
}

void write_demo_set(const fs::path& dir, const std::string& stem, const DemonstrationSet& set) {
  for (std::size_t i = 0; i < set.demos.size(); ++i) write_demo_csv(dir / demo_name(stem, i), set.demos[i], set.dt);
}

std::vector<fs::path> demo_inputs(const std::vector<std::string>& files, const std::string& dir) {
  std::vector<fs::path> paths(files.begin(), files.end());
  if (!dir.empty()) {
    if (!fs::is_directory(dir)) throw ConfigError("--demo-dir: not a directory: " + dir);
    std::vector<fs::path> found;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.is_regular_file() && e.path().extension() == ".csv") found.push_back(e.path());
    }
    std::sort(found.begin(), found.end());
    paths.insert(paths.end(), found.begin(), found.end());
  }
  return paths;
}

void require_task(const TaskConfig& c, std::initializer_list<TaskKind> allowed, const std::string& command) {
  for (TaskKind k : allowed) {
    if (c.task == k) return;
  }
  throw ConfigError(command + ": not available for task '" + std::string(to_string(c.task)) + "'");
}

// ---- demo-gen ---------------------------------------------------------------

void cmd_demo_gen(const Common& common) {
  Loaded l = load(common, "demo-gen");
  const TaskConfig& c = l.config;
  DemonstrationSet set;
  switch (c.task) {
    case TaskKind::ball:
      set = synth_ball_demos(c.ball, c.arm, c.expert, c.demo.count, c.seed, c.demo.dt);
      break;
    case TaskKind::handover: {
      const double settle = c.demo.handover_load == "full" ? c.handover.full_settle : c.handover.empty_settle;
      set = synth_handover_demos(c.handover, c.arm, settle, c.demo.count, c.seed);
      break;
    }
    case TaskKind::footstep:
      set = synth_footstep_demos(c.footstep, footstep_leg(c.footstep), c.demo.count, c.seed);
      break;
  }
  write_demo_set(l.out, "demo", set);
  write_manifest(l);
  spdlog::info("demo-gen: wrote {} demonstrations ({} steps) to {}", set.demos.size(), set.steps(), l.out.string());
}

// ---- augment ----------------------------------------------------------------

void cmd_augment(const Common& common, const std::string& demo_path) {
  Loaded l = load(common, "augment");
  const TaskConfig& c = l.config;
  require_task(c, {TaskKind::ball, TaskKind::handover}, "augment");
  const LoadedDemo nominal = read_demo_csv(demo_path);
  l.manifest.add_input(demo_path);
  const DemonstrationSet set = augment(nominal.demo, nominal.dt, c.arm, c.augment_options());
  write_demo_set(l.out, "aug", set);
  write_manifest(l);
  spdlog::info("augment: wrote {} samples to {}", set.demos.size(), l.out.string());
}

// ---- fit --------------------------------------------------------------------

void cmd_fit(const Common& common, const std::vector<std::string>& files, const std::string& dir) {
  Loaded l = load(common, "fit");
  const std::vector<fs::path> paths = demo_inputs(files, dir);
  if (paths.size() < 2) {
    throw ConfigError("fit: N < 2 demonstrations (got " + std::to_string(paths.size()) + ")");
  }
  for (const fs::path& p : paths) l.manifest.add_input(p);
  const DemonstrationSet set = read_demo_set(paths);
  const PhasePortrait portrait = fit_portrait(set, l.config.fit_options());
  save_portrait(portrait, l.out / "portrait.json", l.manifest.to_json());
  write_manifest(l);
  spdlog::info("fit: {} demonstrations, {} phase steps", set.demos.size(), portrait.size());
}

// ---- train ------------------------------------------------------------------

void cmd_train(const Common& common, const std::string& portrait_path, const std::string& policy_path,
               std::optional<int> updates, int parallel) {
  Loaded l = load(common, "train");
  TaskConfig& c = l.config;
  require_task(c, {TaskKind::ball}, "train");
  if (updates) {
    if (*updates < 0) throw ConfigError("--updates must be >= 0");
    c.train.updates = *updates;
    c.train.schedule.clear();
    l.manifest.config = config_to_json(c);
  }
  if (parallel < 1) throw ConfigError("--parallel must be >= 1");
  const PhasePortrait portrait = load_portrait(portrait_path);
  l.manifest.add_input(portrait_path);
  CouplingPolicy initial = c.initial_policy();
  if (!policy_path.empty()) {
    initial = load_policy(policy_path);
    l.manifest.add_input(policy_path);
  }
  BallTask task(c.ball, c.arm, portrait, initial.basis, c.ball_options(portrait));
  // Rollout parallelism does not change results; it stays out of the manifest.
  const TrainingResult r = run_training(task, initial.weights.to_vector(), c.search_config(parallel));
  save_policy(CouplingPolicy{initial.basis, PolicyWeights::from_vector(r.weights)}, l.out / "policy.json",
              l.manifest.to_json());
  write_training_log(l.out / "training_log.csv", r.log);
  write_manifest(l);
  spdlog::info("train: clean cost {} -> {}", r.clean_costs.empty() ? r.final_cost : r.clean_costs.front(),
               r.final_cost);
}

// ---- run / eval -------------------------------------------------------------

struct Assets {
  PhasePortrait portrait;
  CouplingPolicy policy;
};

Assets load_assets(Loaded& l, const std::string& portrait_path, const std::string& policy_path) {
  PhasePortrait portrait = load_portrait(portrait_path);
  l.manifest.add_input(portrait_path);
  CouplingPolicy policy = l.config.initial_policy();
  if (!policy_path.empty()) {
    policy = load_policy(policy_path);
    l.manifest.add_input(policy_path);
  }
  return {std::move(portrait), std::move(policy)};
}

void cmd_run(const Common& common, const std::string& portrait_path, const std::string& policy_path) {
  Loaded l = load(common, "run");
  const TaskConfig& c = l.config;
  const Assets a = load_assets(l, portrait_path, policy_path);
  switch (c.task) {
    case TaskKind::ball: {
      BallRunOptions o = c.ball_options(a.portrait);
      o.record = true;
      const BallRollout r = run_ball(c.ball, c.arm, a.portrait, a.policy, o);
      write_trajectory_csv(l.out / "trajectory.csv", r.trajectory);
      spdlog::info("run: cost {} pushes {} streak {}", r.cost, r.pushes, r.best_streak);
      break;
    }
    case TaskKind::handover: {
      const HandoverRun r = run_handover(c.handover, c.arm, a.portrait, a.policy, c.handover_giver_duration(),
                                         c.ball_eval.smoothing);
      write_trajectory_csv(l.out / "trajectory.csv", r.rows);
      spdlog::info("run: 95% of hand displacement at {} s", r.time_to_95);
      break;
    }
    case TaskKind::footstep: {
      const PlacementResult r = run_footstep_ppmp(c.footstep, footstep_leg(c.footstep), a.portrait,
                                                  c.compare.stiffness, c.compare.shift);
      std::ostringstream os;
      os << "touchdown,error\n";
      for (std::size_t i = 0; i < r.errors.size(); ++i) os << i << ',' << io::format_double(r.errors[i]) << '\n';
      io::write_file(l.out / "placements.csv", os.str());
      spdlog::info("run: mean placement error {}", r.mean_error);
      break;
    }
  }
  write_manifest(l);
}

json eval_ball(const TaskConfig& c, const Assets& a) {
  const BallRunOptions o = c.ball_options(a.portrait);
  const BallRollout r = run_ball(c.ball, c.arm, a.portrait, a.policy, o);
  return {{"task", "ball"},
          {"cost", r.cost},
          {"failed", r.failed},
          {"pushes", r.pushes},
          {"successful_pushes", r.successful_pushes},
          {"best_streak", r.best_streak},
          {"chest_hits", r.chest_hits},
          {"max_y", r.max_y},
          {"peak_excursion", r.max_y - c.ball.rest_y},
          {"success_excursion", o.success_excursion},
          {"duration", c.ball.duration}};
}

json eval_handover(const TaskConfig& c, const Assets& a) {
  json runs = json::array();
  std::vector<double> t95;
  const double shift = c.handover_eval.shift_deg * kPi / 180.0;
  for (double k : c.handover_eval.stiffness) {
    const CouplingPolicy fixed{a.policy.basis, PolicyWeights::constant(a.policy.basis.size(), k, shift)};
    const HandoverRun r =
        run_handover(c.handover, c.arm, a.portrait, fixed, c.handover_giver_duration(), c.ball_eval.smoothing);
    t95.push_back(r.time_to_95);
    runs.push_back({{"K", k}, {"alpha", shift}, {"time_to_95", r.time_to_95}});
  }
  const HandoverRun policy_run =
      run_handover(c.handover, c.arm, a.portrait, a.policy, c.handover_giver_duration(), c.ball_eval.smoothing);
  json settle = json::object();
  for (const auto& [name, s] : {std::pair{"empty", c.handover.empty_settle}, std::pair{"full", c.handover.full_settle}}) {
    const HandoverDemo d = synth_handover_demo(c.handover, c.arm, s);
    std::vector<double> t(static_cast<std::size_t>(d.demo.q.rows()));
    std::vector<double> y(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      t[i] = static_cast<double>(i) * d.dt;
      const Eigen::Vector4d h = c.arm.forward(d.demo.q.row(static_cast<Eigen::Index>(i)).transpose());
      y[i] = 0.5 * (h[1] + h[3]);
    }
    settle[name] = time_to_fraction(t, y, 0.95);
  }
  // Strictly later settling for each softer coupling in the list.
  bool ordered = true;
  for (std::size_t i = 1; i < t95.size(); ++i) {
    if (c.handover_eval.stiffness[i] < c.handover_eval.stiffness[i - 1]) ordered = ordered && t95[i] > t95[i - 1];
  }
  return {{"task", "handover"},
          {"fixed_coupling", runs},
          {"softer_is_slower", ordered},
          {"policy_time_to_95", policy_run.time_to_95},
          {"demo_time_to_95", settle}};
}

json eval_footstep(const TaskConfig& c, const Assets& a) {
  const PlacementResult r =
      run_footstep_ppmp(c.footstep, footstep_leg(c.footstep), a.portrait, c.compare.stiffness, c.compare.shift);
  return {{"task", "footstep"},
          {"touchdowns", r.errors.size()},
          {"mean_error", r.mean_error},
          {"max_error", r.max_error}};
}

void cmd_eval(const Common& common, const std::string& portrait_path, const std::string& policy_path) {
  Loaded l = load(common, "eval");
  const TaskConfig& c = l.config;
  const Assets a = load_assets(l, portrait_path, policy_path);
  json metrics;
  switch (c.task) {
    case TaskKind::ball: metrics = eval_ball(c, a); break;
    case TaskKind::handover: metrics = eval_handover(c, a); break;
    case TaskKind::footstep: metrics = eval_footstep(c, a); break;
  }
  metrics["manifest"] = l.manifest.to_json();
  io::write_json(l.out / "metrics.json", metrics);
  write_manifest(l);
  json summary = metrics;
  summary.erase("manifest");
  std::cout << summary.dump() << '\n';
}

// ---- compare-dmp ------------------------------------------------------------

void cmd_compare(const Common& common, const std::string& portrait_path) {
  Loaded l = load(common, "compare-dmp");
  TaskConfig& c = l.config;
  if (c.task != TaskKind::footstep) {
    spdlog::warn("compare-dmp always runs the footstep task (config task is '{}')", to_string(c.task));
    c.task = TaskKind::footstep;
  }
  const KinematicChain leg = footstep_leg(c.footstep);
  PhasePortrait portrait = [&] {
    if (!portrait_path.empty()) {
      l.manifest.add_input(portrait_path);
      return load_portrait(portrait_path);
    }
    const DemonstrationSet set = synth_footstep_demos(c.footstep, leg, c.demo.count, c.seed);
    return fit_portrait(set, c.fit_options());
  }();
  ComparisonOptions o = c.compare;
  o.seed = c.seed;
  const std::vector<ComparisonRow> rows = compare_footstep(c.footstep, leg, portrait, o);
  std::ostringstream os;
  write_comparison_csv(os, rows);
  io::write_file(l.out / "comparison.csv", os.str());
  write_manifest(l);
  std::cout << os.str();
}

// ---- serve ------------------------------------------------------------------

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

TaskAssets task_assets(Loaded& l, const std::string& portrait_path, const std::string& policy_path) {
  Assets a = load_assets(l, portrait_path, policy_path);
  return {std::move(a.portrait), std::move(a.policy)};
}

std::vector<ControlMessage> read_script(const fs::path& path) {
  std::vector<ControlMessage> out;
  std::istringstream in(io::read_file(path));
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_control_message(std::string_view(line)));
    } catch (const ParseError& e) {
      throw ParseError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

struct ServeArgs {
  std::string portrait;
  std::string policy;
  std::vector<std::string> extra;  // TASK:PORTRAIT[:POLICY]
  std::string script;
  long ticks = 300;
  std::string address = "127.0.0.1";
  int port = 8765;
  double rate = 30.0;
  long max_ticks = 0;
};

void cmd_serve(const Common& common, const ServeArgs& args) {
  Loaded l = load(common, "serve");
  std::map<TaskKind, TaskAssets> assets;
  assets.emplace(l.config.task, task_assets(l, args.portrait, args.policy));
  for (const std::string& spec : args.extra) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
    if (parts.size() < 2 || parts.size() > 3) throw ConfigError("--assets: expected TASK:PORTRAIT[:POLICY]");
    const TaskKind kind = task_kind_from_string(parts[0]);
    TaskConfig per_task = l.config;
    per_task.task = kind;
    Loaded tmp{per_task, l.manifest, l.out};
    assets.insert_or_assign(kind, task_assets(tmp, parts[1], parts.size() == 3 ? parts[2] : ""));
    l.manifest = tmp.manifest;
  }
  BridgeCore core(l.config, std::move(assets), l.config.task);

  if (!args.script.empty()) {
    l.manifest.add_input(args.script);
    if (args.ticks < 0) throw ConfigError("--ticks must be >= 0");
    const ReplayResult r = replay(core, read_script(args.script), args.ticks);
    std::ostringstream os;
    for (const json& e : r.rejected) os << e.dump() << '\n';
    for (const BridgeCore::Step& s : r.steps) {
      for (const json& e : s.errors) os << e.dump() << '\n';
      os << frame_to_json(s.frame).dump() << '\n';
    }
    io::write_file(l.out / "frames.jsonl", os.str());
    write_manifest(l);
    spdlog::info("serve: replayed {} ticks ({} rejected)", r.steps.size(), r.rejected.size());
    return;
  }

  if (args.port < 0 || args.port > 65535) throw ConfigError("--port must be in [0, 65535]");
  if (args.rate < 0.0) throw ConfigError("--rate must be >= 0");
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  ServeOptions o;
  o.address = args.address;
  o.port = static_cast<unsigned short>(args.port);
  o.rate_hz = args.rate;
  o.max_ticks = args.max_ticks;
  o.stop = &g_stop;
  o.on_listen = [](unsigned short port) {
    // Machine-readable so scripts can connect to a port picked with --port 0.
    std::cout << "listening " << port << std::endl;
  };
  serve(core, o);
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("ppmp");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("PPMP_LOG_LEVEL")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; only accept real names.
    if (level != spdlog::level::off || std::string(env) == "off") spdlog::set_level(level);
  }
}

void report(std::string_view kind, std::string_view message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Phase portrait movement primitives"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config_path, "Task configuration JSON")->check(CLI::ExistingFile);
    sub->add_option("--seed", common.seed, "Override the configured seed");
    sub->add_option("--out", common.out, "Output directory");
  };

  auto* demo_gen = app.add_subcommand("demo-gen", "Synthesize demonstrations");
  add_common(demo_gen);

  std::string demo_path;
  auto* augment_cmd = app.add_subcommand("augment", "Expand a nominal demonstration");
  add_common(augment_cmd);
  augment_cmd->add_option("--demo", demo_path, "Nominal demonstration CSV")->required()->check(CLI::ExistingFile);

  std::vector<std::string> demo_files;
  std::string demo_dir;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a phase portrait");
  add_common(fit_cmd);
  fit_cmd->add_option("--demos", demo_files, "Demonstration CSVs")->check(CLI::ExistingFile);
  fit_cmd->add_option("--demo-dir", demo_dir, "Directory of demonstration CSVs");

  std::string portrait_path;
  std::string policy_path;
  std::optional<int> updates;
  int parallel = 1;
  auto* train_cmd = app.add_subcommand("train", "Train the coupling policy");
  add_common(train_cmd);
  train_cmd->add_option("--portrait", portrait_path)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--policy", policy_path, "Initial policy (default: from config)")->check(CLI::ExistingFile);
  train_cmd->add_option("--updates", updates, "Override the number of updates");
  train_cmd->add_option("--parallel", parallel, "Roll-out worker threads");

  auto* run_cmd = app.add_subcommand("run", "Run one roll-out and write its trajectory");
  auto* eval_cmd = app.add_subcommand("eval", "Compute task metrics");
  for (CLI::App* sub : {run_cmd, eval_cmd}) {
    add_common(sub);
    sub->add_option("--portrait", portrait_path)->required()->check(CLI::ExistingFile);
    sub->add_option("--policy", policy_path, "Coupling policy (default: from config)")->check(CLI::ExistingFile);
  }

  auto* compare_cmd = app.add_subcommand("compare-dmp", "Footstep comparison against a rhythmic DMP");
  add_common(compare_cmd);
  compare_cmd->add_option("--portrait", portrait_path, "Footstep portrait (default: fit from synthetic demos)")
      ->check(CLI::ExistingFile);

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Interactive bridge over WebSocket");
  add_common(serve_cmd);
  serve_cmd->add_option("--portrait", serve_args.portrait)->required()->check(CLI::ExistingFile);
  serve_cmd->add_option("--policy", serve_args.policy)->check(CLI::ExistingFile);
  serve_cmd->add_option("--assets", serve_args.extra, "Extra task assets TASK:PORTRAIT[:POLICY]");
  serve_cmd->add_option("--script", serve_args.script, "Replay control messages (JSONL) offline")
      ->check(CLI::ExistingFile);
  serve_cmd->add_option("--ticks", serve_args.ticks, "Ticks to simulate with --script");
  serve_cmd->add_option("--address", serve_args.address);
  serve_cmd->add_option("--port", serve_args.port, "0 picks a free port");
  serve_cmd->add_option("--rate", serve_args.rate, "Ticks per second, 0 = unthrottled");
  serve_cmd->add_option("--max-ticks", serve_args.max_ticks, "Stop after this many ticks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    report("usage", e.what());
    return 1;
  }

  try {
    if (*demo_gen) cmd_demo_gen(common);
    if (*augment_cmd) cmd_augment(common, demo_path);
    if (*fit_cmd) cmd_fit(common, demo_files, demo_dir);
    if (*train_cmd) cmd_train(common, portrait_path, policy_path, updates, parallel);
    if (*run_cmd) cmd_run(common, portrait_path, policy_path);
    if (*eval_cmd) cmd_eval(common, portrait_path, policy_path);
    if (*compare_cmd) cmd_compare(common, portrait_path);
    if (*serve_cmd) cmd_serve(common, serve_args);
  } catch (const ConfigError& e) {
    report("config", e.what());
    return 1;
  } catch (const std::exception& e) {
    report("runtime", e.what());
    return 2;
  }
  return 0;
}
