#include "ppmp/config.hpp"

#include <set>

#include "ppmp/error.hpp"
#include "ppmp/io.hpp"

namespace ppmp {

using nlohmann::json;

std::string_view to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::ball: return "ball";
    case TaskKind::handover: return "handover";
    case TaskKind::footstep: return "footstep";
  }
  return "ball";
}

TaskKind task_kind_from_string(std::string_view text) {
  if (text == "ball") return TaskKind::ball;
  if (text == "handover") return TaskKind::handover;
  if (text == "footstep") return TaskKind::footstep;
  throw ConfigError("unknown task '" + std::string(text) + "' (expected ball, handover or footstep)");
}

namespace {

// Reads optional keys of one section and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& doc, std::string context) : doc_(doc), context_(std::move(context)) {
    if (!doc_.is_object()) throw ConfigError(context_ + ": expected an object");
  }
  ~Section() = default;

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (doc_.contains(key)) out = io::require<T>(doc_, key, context_);
  }

  [[nodiscard]] const json* sub(const char* key) {
    seen_.insert(key);
    return doc_.contains(key) ? &doc_.at(key) : nullptr;
  }

  [[nodiscard]] std::string context(const char* key) const { return context_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : doc_.items()) {
      if (!seen_.contains(key)) throw ConfigError(context_ + ": unknown key '" + key + "'");
    }
  }

 private:
  const json& doc_;
  std::string context_;
  std::set<std::string> seen_;
};

void read_limits(Section& s, const char* key, std::vector<std::pair<double, double>>& out) {
  if (const json* j = s.sub(key)) {
    out.clear();
    if (!j->is_array()) throw ConfigError(s.context(key) + ": expected [[lo, hi], ...]");
    for (const json& e : *j) {
      if (!e.is_array() || e.size() != 2) throw ConfigError(s.context(key) + ": expected [[lo, hi], ...]");
      out.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  }
}

void read_schedule(Section& s, std::vector<SearchStage>& out) {
  if (const json* j = s.sub("schedule")) {
    out.clear();
    if (!j->is_array()) throw ConfigError(s.context("schedule") + ": expected an array");
    for (const json& e : *j) {
      Section st(e, s.context("schedule"));
      SearchStage stage;
      st.get("updates", stage.updates);
      st.get("rollouts", stage.rollouts);
      st.finish();
      out.push_back(stage);
    }
  }
}

void read_sines(Section& s, std::vector<SineComponent>& out) {
  if (const json* j = s.sub("schedule")) {
    out.clear();
    if (!j->is_array()) throw ConfigError(s.context("schedule") + ": expected an array");
    for (const json& e : *j) {
      Section c(e, s.context("schedule"));
      SineComponent sc;
      c.get("amplitude", sc.amplitude);
      c.get("frequency", sc.frequency);
      c.get("phase", sc.phase);
      c.finish();
      out.push_back(sc);
    }
  }
}

json limits_json(const std::vector<std::pair<double, double>>& limits) {
  json out = json::array();
  for (const auto& [lo, hi] : limits) out.push_back({lo, hi});
  return out;
}

}  // namespace

TaskConfig config_from_json(const json& doc, const std::string& source) {
  TaskConfig c;
  Section root(doc, source);
  std::string task = std::string(to_string(c.task));
  root.get("task", task);
  c.task = task_kind_from_string(task);
  root.get("seed", c.seed);
  if (const json* j = root.sub("arm")) c.arm = dual_arm_from_json(*j, source + ".arm");

  if (const json* j = root.sub("demo")) {
    Section s(*j, source + ".demo");
    s.get("count", c.demo.count);
    s.get("dt", c.demo.dt);
    s.get("handover_load", c.demo.handover_load);
    s.finish();
  }
  if (const json* j = root.sub("augment")) {
    Section s(*j, source + ".augment");
    s.get("count", c.augment.count);
    s.get("sigma", c.augment.sigma);
    s.get("max_retries", c.augment.max_retries);
    s.get("ik_tolerance", c.augment.ik.tolerance);
    s.get("ik_max_iterations", c.augment.ik.max_iterations);
    s.get("ik_damping", c.augment.ik.damping);
    s.finish();
  }
  if (const json* j = root.sub("fit")) {
    Section s(*j, source + ".fit");
    s.get("regularization", c.fit.regularization);
    s.finish();
  }
  if (const json* j = root.sub("policy")) {
    Section s(*j, source + ".policy");
    s.get("basis_count", c.policy.basis_count);
    s.get("width_factor", c.policy.width_factor);
    s.get("init_stiffness", c.policy.init_stiffness);
    s.get("init_shift_deg", c.policy.init_shift_deg);
    s.finish();
  }
  if (const json* j = root.sub("train")) {
    Section s(*j, source + ".train");
    s.get("rollouts", c.train.rollouts);
    s.get("updates", c.train.updates);
    s.get("noise_std_stiffness", c.train.noise_std_stiffness);
    s.get("noise_std_shift", c.train.noise_std_shift);
    s.get("lambda", c.train.lambda);
    s.get("noise_decay", c.train.noise_decay);
    s.get("failure_penalty", c.train.failure_penalty);
    read_schedule(s, c.train.schedule);
    s.finish();
  }
  if (const json* j = root.sub("ball")) {
    Section s(*j, source + ".ball");
    BallParams& b = c.ball;
    s.get("string_length", b.string_length);
    s.get("rest_y", b.rest_y);
    s.get("gravity", b.gravity);
    s.get("damping", b.damping);
    s.get("radius", b.radius);
    s.get("chest_y", b.chest_y);
    s.get("contact_width", b.contact_width);
    s.get("start_y", b.start_y);
    s.get("start_jitter", b.start_jitter);
    s.get("dt", b.dt);
    s.get("substeps", b.substeps);
    s.get("actuator_lag", b.actuator_lag);
    s.get("max_joint_speed", b.max_joint_speed);
    s.get("duration", b.duration);
    s.finish();
  }
  if (const json* j = root.sub("expert")) {
    Section s(*j, source + ".expert");
    s.get("hand_extended", c.expert.hand_extended);
    s.get("hand_retracted", c.expert.hand_retracted);
    s.get("hand_lateral", c.expert.hand_lateral);
    s.get("push_duration", c.expert.push_duration);
    s.finish();
  }
  if (const json* j = root.sub("cost")) {
    Section s(*j, source + ".cost");
    s.get("v1", c.cost.v1);
    s.get("v2", c.cost.v2);
    s.get("v3", c.cost.v3);
    s.get("y_goal", c.cost.y_goal);
    s.get("penalty_on_failure", c.cost.penalty_on_failure);
    s.finish();
  }
  if (const json* j = root.sub("ball_eval")) {
    Section s(*j, source + ".ball_eval");
    s.get("success_excursion", c.ball_eval.success_excursion);
    s.get("smoothing", c.ball_eval.smoothing);
    s.finish();
  }
  if (const json* j = root.sub("handover")) {
    Section s(*j, source + ".handover");
    HandoverParams& h = c.handover;
    s.get("giver_start_y", h.giver_start_y);
    s.get("giver_end_y", h.giver_end_y);
    s.get("giver_lateral", h.giver_lateral);
    s.get("hand_home_y", h.hand_home_y);
    s.get("hand_reach_y", h.hand_reach_y);
    s.get("hand_lateral", h.hand_lateral);
    s.get("empty_settle", h.empty_settle);
    s.get("full_settle", h.full_settle);
    s.get("giver_ratio", h.giver_ratio);
    s.get("arrival_tolerance", h.arrival_tolerance);
    s.get("horizon", h.horizon);
    s.get("demo_dt", h.demo_dt);
    s.get("settle_jitter", h.settle_jitter);
    s.get("lateral_jitter", h.lateral_jitter);
    s.get("dt", h.dt);
    s.get("substeps", h.substeps);
    s.get("actuator_lag", h.actuator_lag);
    s.finish();
  }
  if (const json* j = root.sub("handover_eval")) {
    Section s(*j, source + ".handover_eval");
    s.get("shift_deg", c.handover_eval.shift_deg);
    s.get("stiffness", c.handover_eval.stiffness);
    s.finish();
  }
  if (const json* j = root.sub("footstep")) {
    Section s(*j, source + ".footstep");
    FootstepParams& f = c.footstep;
    s.get("period", f.period);
    s.get("hip_y", f.hip_y);
    s.get("links", f.links);
    read_limits(s, "limits", f.limits);
    s.get("foot_low", f.foot_low);
    s.get("foot_high", f.foot_high);
    s.get("target_mean", f.target_mean);
    s.get("target_span", f.target_span);
    read_sines(s, f.schedule);
    s.get("dt", f.dt);
    s.get("duration", f.duration);
    s.get("demo_dt", f.demo_dt);
    s.get("dmp_update_rate", f.dmp_update_rate);
    s.finish();
  }
  if (const json* j = root.sub("compare")) {
    Section s(*j, source + ".compare");
    ComparisonOptions& o = c.compare;
    s.get("budgets", o.budgets);
    s.get("stiffness", o.stiffness);
    s.get("shift", o.shift);
    s.get("dmp_basis", o.dmp_basis);
    s.get("replan_rollouts", o.replan.rollouts);
    s.get("replan_noise_std", o.replan.noise_std);
    s.get("replan_lambda", o.replan.lambda);
    s.get("replan_noise_decay", o.replan.noise_decay);
    s.finish();
  }
  root.finish();
  c.augment.seed = c.seed;
  c.compare.seed = c.seed;
  c.validate();
  return c;
}

json config_to_json(const TaskConfig& c) {
  json out;
  out["task"] = std::string(to_string(c.task));
  out["seed"] = c.seed;
  out["arm"] = dual_arm_to_json(c.arm);
  out["demo"] = {{"count", c.demo.count}, {"dt", c.demo.dt}, {"handover_load", c.demo.handover_load}};
  out["augment"] = {{"count", c.augment.count},
                    {"sigma", c.augment.sigma},
                    {"max_retries", c.augment.max_retries},
                    {"ik_tolerance", c.augment.ik.tolerance},
                    {"ik_max_iterations", c.augment.ik.max_iterations},
                    {"ik_damping", c.augment.ik.damping}};
  out["fit"] = {{"regularization", c.fit.regularization}};
  out["policy"] = {{"basis_count", c.policy.basis_count},
                   {"width_factor", c.policy.width_factor},
                   {"init_stiffness", c.policy.init_stiffness},
                   {"init_shift_deg", c.policy.init_shift_deg}};
  json schedule = json::array();
  for (const SearchStage& s : c.train.schedule) schedule.push_back({{"updates", s.updates}, {"rollouts", s.rollouts}});
  out["train"] = {{"rollouts", c.train.rollouts},
                  {"updates", c.train.updates},
                  {"noise_std_stiffness", c.train.noise_std_stiffness},
                  {"noise_std_shift", c.train.noise_std_shift},
                  {"lambda", c.train.lambda},
                  {"noise_decay", c.train.noise_decay},
                  {"failure_penalty", c.train.failure_penalty},
                  {"schedule", schedule}};
  const BallParams& b = c.ball;
  out["ball"] = {{"string_length", b.string_length}, {"rest_y", b.rest_y},
                 {"gravity", b.gravity},             {"damping", b.damping},
                 {"radius", b.radius},               {"chest_y", b.chest_y},
                 {"contact_width", b.contact_width}, {"start_y", b.start_y},
                 {"start_jitter", b.start_jitter},   {"dt", b.dt},
                 {"substeps", b.substeps},           {"actuator_lag", b.actuator_lag},
                 {"max_joint_speed", b.max_joint_speed}, {"duration", b.duration}};
  out["expert"] = {{"hand_extended", c.expert.hand_extended},
                   {"hand_retracted", c.expert.hand_retracted},
                   {"hand_lateral", c.expert.hand_lateral},
                   {"push_duration", c.expert.push_duration}};
  out["cost"] = {{"v1", c.cost.v1}, {"v2", c.cost.v2}, {"v3", c.cost.v3},
                 {"y_goal", c.cost.y_goal}, {"penalty_on_failure", c.cost.penalty_on_failure}};
  out["ball_eval"] = {{"success_excursion", c.ball_eval.success_excursion},
                      {"smoothing", c.ball_eval.smoothing}};
  const HandoverParams& h = c.handover;
  out["handover"] = {{"giver_start_y", h.giver_start_y}, {"giver_end_y", h.giver_end_y},
                     {"giver_lateral", h.giver_lateral}, {"hand_home_y", h.hand_home_y},
                     {"hand_reach_y", h.hand_reach_y},   {"hand_lateral", h.hand_lateral},
                     {"empty_settle", h.empty_settle},   {"full_settle", h.full_settle},
                     {"giver_ratio", h.giver_ratio},     {"arrival_tolerance", h.arrival_tolerance},
                     {"horizon", h.horizon},             {"demo_dt", h.demo_dt},
                     {"settle_jitter", h.settle_jitter}, {"lateral_jitter", h.lateral_jitter},
                     {"dt", h.dt},                       {"substeps", h.substeps},
                     {"actuator_lag", h.actuator_lag}};
  out["handover_eval"] = {{"shift_deg", c.handover_eval.shift_deg}, {"stiffness", c.handover_eval.stiffness}};
  const FootstepParams& f = c.footstep;
  json sines = json::array();
  for (const SineComponent& s : f.schedule) {
    sines.push_back({{"amplitude", s.amplitude}, {"frequency", s.frequency}, {"phase", s.phase}});
  }
  out["footstep"] = {{"period", f.period},           {"hip_y", f.hip_y},
                     {"links", f.links},             {"limits", limits_json(f.limits)},
                     {"foot_low", f.foot_low},       {"foot_high", f.foot_high},
                     {"target_mean", f.target_mean}, {"target_span", f.target_span},
                     {"schedule", sines},            {"dt", f.dt},
                     {"duration", f.duration},       {"demo_dt", f.demo_dt},
                     {"dmp_update_rate", f.dmp_update_rate}};
  const ComparisonOptions& o = c.compare;
  out["compare"] = {{"budgets", o.budgets},
                    {"stiffness", o.stiffness},
                    {"shift", o.shift},
                    {"dmp_basis", o.dmp_basis},
                    {"replan_rollouts", o.replan.rollouts},
                    {"replan_noise_std", o.replan.noise_std},
                    {"replan_lambda", o.replan.lambda},
                    {"replan_noise_decay", o.replan.noise_decay}};
  return out;
}

TaskConfig load_config(const std::filesystem::path& path) {
  return config_from_json(io::read_json(path), path.string());
}

void TaskConfig::validate() const {
  if (demo.count < 1) throw ConfigError("config.demo.count must be >= 1");
  if (!(demo.dt > 0.0)) throw ConfigError("config.demo.dt must be positive");
  if (demo.handover_load != "empty" && demo.handover_load != "full") {
    throw ConfigError("config.demo.handover_load must be 'empty' or 'full'");
  }
  if (augment.count < 1) throw ConfigError("config.augment.count must be >= 1");
  if (!(augment.sigma >= 0.0)) throw ConfigError("config.augment.sigma must be >= 0");
  if (!(fit.regularization >= 0.0)) throw ConfigError("config.fit.regularization must be >= 0");
  if (policy.basis_count < 2) throw ConfigError("config.policy.basis_count must be >= 2");
  if (!(train.noise_std_stiffness >= 0.0) || !(train.noise_std_shift >= 0.0)) {
    throw ConfigError("config.train noise must be >= 0");
  }
  ball.validate();
  cost.validate();
  handover.validate();
  footstep.validate();
  if (handover_eval.stiffness.empty()) throw ConfigError("config.handover_eval.stiffness must not be empty");
  search_config(1).validate(2 * policy.basis_count);
}

PhaseMode TaskConfig::mode() const {
  return task == TaskKind::handover ? PhaseMode::single_stroke : PhaseMode::cyclic;
}

RbfBasis TaskConfig::basis() const { return RbfBasis::uniform(policy.basis_count, mode(), policy.width_factor); }

CouplingPolicy TaskConfig::initial_policy() const {
  return {basis(), PolicyWeights::constant(policy.basis_count, policy.init_stiffness,
                                           deg_to_rad(policy.init_shift_deg))};
}

SearchConfig TaskConfig::search_config(int parallel) const {
  SearchConfig sc;
  sc.rollouts_per_update = train.rollouts;
  sc.updates = train.updates;
  sc.lambda = train.lambda;
  sc.noise_decay = train.noise_decay;
  sc.failure_penalty = train.failure_penalty;
  sc.seed = seed;
  sc.parallel = parallel;
  sc.schedule = train.schedule;
  const int n = policy.basis_count;
  sc.noise_variance.resize(2 * n);
  sc.noise_variance.head(n).setConstant(train.noise_std_stiffness * train.noise_std_stiffness);
  sc.noise_variance.tail(n).setConstant(train.noise_std_shift * train.noise_std_shift);
  return sc;
}

AugmentOptions TaskConfig::augment_options() const {
  AugmentOptions a = augment;
  a.seed = seed;
  a.effector_gain = task == TaskKind::handover ? handover_effector_gain() : ball_effector_gain();
  return a;
}

FitOptions TaskConfig::fit_options() const {
  FitOptions f;
  f.mode = mode();
  f.regularization = fit.regularization;
  if (task == TaskKind::footstep) {
    const KinematicChain leg = footstep_leg(footstep);
    f.progress_dim = 0;
    f.target_progress_dim = 0;
    f.effector = [leg](const Eigen::VectorXd& q) { return leg.forward(q); };
  } else {
    const DualArm a = arm;
    f.progress_dim = 1;
    f.target_progress_dim = 1;
    f.effector = [a](const Eigen::VectorXd& q) { return a.forward(q); };
  }
  return f;
}

BallRunOptions TaskConfig::ball_options(const PhasePortrait& portrait) const {
  BallRunOptions o;
  o.cost = cost;
  o.seed = seed;
  o.smoothing = ball_eval.smoothing;
  o.success_excursion =
      ball_eval.success_excursion > 0.0 ? ball_eval.success_excursion : portrait.target_plane().y_scale;
  return o;
}

double TaskConfig::handover_giver_duration() const {
  const double settle = demo.handover_load == "full" ? handover.full_settle : handover.empty_settle;
  return handover.giver_ratio * receiver_duration(handover, settle);
}

}  // namespace ppmp
