#include "ppmp/bridge.hpp"

#include <cmath>

#include "ppmp/error.hpp"
#include "ppmp/io.hpp"

namespace ppmp {

using nlohmann::json;

namespace {

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

json frame_to_json(const StateFrame& f) {
  return {{"v", kProtocolVersion}, {"type", "state"},   {"tick", f.tick},
          {"t", f.t},              {"task", f.task},    {"phi_t", f.phi_t},
          {"phi_r", f.phi_r},      {"K", f.stiffness},  {"alpha", f.shift},
          {"grabbed", f.grabbed},  {"target", f.target}, {"hands", f.hands},
          {"q", f.q},              {"cost", f.cost}};
}

StateFrame frame_from_json(const json& doc) {
  const std::string ctx = "frame";
  if (io::require<std::string>(doc, "type", ctx) != "state") throw ParseError("frame: not a state frame");
  StateFrame f;
  f.tick = io::require<long>(doc, "tick", ctx);
  f.t = io::require<double>(doc, "t", ctx);
  f.task = io::require<std::string>(doc, "task", ctx);
  f.phi_t = io::require<double>(doc, "phi_t", ctx);
  f.phi_r = io::require<double>(doc, "phi_r", ctx);
  f.stiffness = io::require<double>(doc, "K", ctx);
  f.shift = io::require<double>(doc, "alpha", ctx);
  f.grabbed = io::require<bool>(doc, "grabbed", ctx);
  f.target = io::require<std::vector<double>>(doc, "target", ctx);
  f.hands = io::require<std::vector<double>>(doc, "hands", ctx);
  f.q = io::require<std::vector<double>>(doc, "q", ctx);
  f.cost = io::require<double>(doc, "cost", ctx);
  return f;
}

json error_frame(long tick, const std::string& reason) {
  return {{"v", kProtocolVersion}, {"type", "error"}, {"tick", tick}, {"reason", reason}};
}

std::string_view to_string(ControlKind kind) {
  switch (kind) {
    case ControlKind::grab_target: return "grab_target";
    case ControlKind::move_target: return "move_target";
    case ControlKind::release_target: return "release_target";
    case ControlKind::switch_task: return "switch_task";
    case ControlKind::set_coupling: return "set_coupling";
    case ControlKind::reset: return "reset";
  }
  return "reset";
}

ControlMessage parse_control_message(const json& doc) {
  if (!doc.is_object()) throw ParseError("message: expected a JSON object");
  ControlMessage m;
  const auto kind = io::require<std::string>(doc, "kind", "message");
  bool known = false;
  for (ControlKind k : {ControlKind::grab_target, ControlKind::move_target, ControlKind::release_target,
                        ControlKind::switch_task, ControlKind::set_coupling, ControlKind::reset}) {
    if (kind == to_string(k)) {
      m.kind = k;
      known = true;
    }
  }
  if (!known) throw ParseError("message.kind: unknown kind '" + kind + "'");
  if (doc.contains("tick") && !doc.at("tick").is_null()) m.tick = io::require<long>(doc, "tick", "message");
  if (doc.contains("payload") && !doc.at("payload").is_null()) {
    if (!doc.at("payload").is_object()) throw ParseError("message.payload: expected an object");
    m.payload = doc.at("payload");
  }
  switch (m.kind) {
    case ControlKind::move_target: {
      const auto p = io::require<std::vector<double>>(m.payload, "position", "message.payload");
      if (p.size() != 2 || !std::isfinite(p[0]) || !std::isfinite(p[1])) {
        throw ParseError("message.payload.position: expected [x, y]");
      }
      break;
    }
    case ControlKind::switch_task:
      task_kind_from_string(io::require<std::string>(m.payload, "task", "message.payload"));
      break;
    case ControlKind::set_coupling:
      if (!m.payload.empty()) {
        const double k = io::require<double>(m.payload, "K", "message.payload");
        const double a = io::require<double>(m.payload, "alpha", "message.payload");
        if (!std::isfinite(k) || !std::isfinite(a) || k < 0.0) {
          throw ParseError("message.payload: K must be finite and >= 0, alpha finite");
        }
      }
      break;
    default: break;
  }
  return m;
}

ControlMessage parse_control_message(std::string_view text) {
  return parse_control_message(io::parse_json(text, "message"));
}

json control_to_json(const ControlMessage& m) {
  json out{{"kind", std::string(to_string(m.kind))}, {"payload", m.payload}};
  if (m.tick) out["tick"] = *m.tick;
  return out;
}

double release_velocity(const std::deque<std::pair<double, double>>& samples) {
  const std::size_t n = std::min<std::size_t>(samples.size(), 5);
  if (n < 2) return 0.0;
  double mt = 0.0;
  double my = 0.0;
  for (std::size_t i = samples.size() - n; i < samples.size(); ++i) {
    mt += samples[i].first;
    my += samples[i].second;
  }
  mt /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = samples.size() - n; i < samples.size(); ++i) {
    num += (samples[i].first - mt) * (samples[i].second - my);
    den += (samples[i].first - mt) * (samples[i].first - mt);
  }
  return den > 0.0 ? num / den : 0.0;
}

BridgeCore::BridgeCore(TaskConfig config, std::map<TaskKind, TaskAssets> assets, TaskKind initial)
    : config_(std::move(config)), assets_(std::move(assets)), task_(initial) {
  if (!assets_.contains(initial)) throw ConfigError("bridge: no portrait/policy loaded for the initial task");
  for (const auto& [kind, a] : assets_) {
    if (kind == TaskKind::footstep) throw ConfigError("bridge: the footstep task is not interactive");
    const PhaseMode want = kind == TaskKind::handover ? PhaseMode::single_stroke : PhaseMode::cyclic;
    if (a.portrait.mode() != want) throw ConfigError("bridge: portrait mode does not match its task");
  }
  rebuild();
}

double BridgeCore::dt() const { return task_ == TaskKind::ball ? config_.ball.dt : config_.handover.dt; }

Workspace BridgeCore::workspace() const {
  Workspace w;
  if (task_ == TaskKind::ball) {
    w.y_min = config_.ball.chest_y + config_.ball.radius;
    w.y_max = config_.ball.rest_y + 0.95 * config_.ball.string_length;
  } else {
    w.y_min = config_.handover.hand_home_y;
    w.y_max = config_.handover.giver_start_y + 0.5;
  }
  return w;
}

void BridgeCore::rebuild() {
  const TaskAssets& a = assets_.at(task_);
  ball_.reset();
  handover_.reset();
  grabbed_ = false;
  drag_.clear();
  if (task_ == TaskKind::ball) {
    const BallRunOptions o = config_.ball_options(a.portrait);
    ball_ = std::make_unique<BallSession>(config_.ball, config_.arm, a.portrait, a.policy, o);
    if (override_) ball_->controller().override_coupling(override_);
  } else {
    const HandoverParams& h = config_.handover;
    partner_ = {h.giver_lateral, h.giver_start_y};
    handover_ = std::make_unique<HandoverSession>(h, config_.arm, a.portrait, a.policy, partner_,
                                                  config_.ball_eval.smoothing);
    if (override_) handover_->controller().override_coupling(override_);
  }
}

std::optional<std::string> BridgeCore::check(const ControlMessage& m) const {
  switch (m.kind) {
    case ControlKind::move_target: {
      const auto p = m.payload.at("position");
      const double x = p[0].get<double>();
      const double y = p[1].get<double>();
      if (!workspace().contains(x, y)) return "move_target: position outside the workspace";
      break;
    }
    case ControlKind::switch_task: {
      const TaskKind k = task_kind_from_string(m.payload.at("task").get<std::string>());
      if (!assets_.contains(k)) return "switch_task: no portrait/policy loaded for '" + std::string(to_string(k)) + "'";
      break;
    }
    default: break;
  }
  return std::nullopt;
}

std::optional<std::string> BridgeCore::enqueue(const ControlMessage& message) {
  std::lock_guard lock(mutex_);
  if (auto reason = check(message)) return reason;
  const long at = message.tick.value_or(tick_ + 1);
  queue_.emplace(std::make_pair(at, arrivals_++), message);
  return std::nullopt;
}

std::optional<std::string> BridgeCore::apply(const ControlMessage& m) {
  if (auto reason = check(m)) return reason;
  const double now = static_cast<double>(tick_) * dt();
  switch (m.kind) {
    case ControlKind::grab_target:
      grabbed_ = true;
      drag_.clear();
      if (ball_) ball_->world().grab();
      break;
    case ControlKind::move_target: {
      if (!grabbed_) return "move_target: target is not grabbed";
      const double x = m.payload.at("position")[0].get<double>();
      const double y = m.payload.at("position")[1].get<double>();
      if (ball_) ball_->world().move_to(x, y);
      partner_ = {x, y};
      drag_.emplace_back(now, y);
      if (drag_.size() > 5) drag_.pop_front();
      break;
    }
    case ControlKind::release_target: {
      if (!grabbed_) return "release_target: target is not grabbed";
      const double vy = release_velocity(drag_);
      grabbed_ = false;
      drag_.clear();
      if (ball_) {
        ball_->world().release(vy);
        ball_->controller().seed_target(ball_->world().y(), vy);
      }
      break;
    }
    case ControlKind::switch_task:
      task_ = task_kind_from_string(m.payload.at("task").get<std::string>());
      rebuild();
      break;
    case ControlKind::set_coupling:
      if (m.payload.empty()) {
        override_.reset();
      } else {
        override_ = Coupling{m.payload.at("K").get<double>(), m.payload.at("alpha").get<double>()};
      }
      if (ball_) ball_->controller().override_coupling(override_);
      if (handover_) handover_->controller().override_coupling(override_);
      break;
    case ControlKind::reset:
      override_.reset();
      rebuild();
      break;
  }
  return std::nullopt;
}

BridgeCore::Step BridgeCore::step() {
  std::lock_guard lock(mutex_);
  Step out;
  const long next = tick_ + 1;
  while (!queue_.empty() && queue_.begin()->first.first <= next) {
    const ControlMessage m = queue_.begin()->second;
    queue_.erase(queue_.begin());
    if (auto reason = apply(m)) out.errors.push_back(error_frame(next, *reason));
  }
  if (ball_) {
    ball_->tick();
  } else {
    handover_->tick(partner_);
  }
  tick_ = next;
  out.frame = frame();
  return out;
}

StateFrame BridgeCore::frame() const {
  StateFrame f;
  f.tick = tick_;
  f.task = std::string(to_string(task_));
  f.grabbed = grabbed_;
  const PpmpController& c = ball_ ? ball_->controller() : handover_->controller();
  f.phi_t = c.phi_target().radians();
  f.phi_r = c.phi_robot().radians();
  f.stiffness = c.coupling().stiffness;
  f.shift = c.coupling().shift;
  if (ball_) {
    const BallWorld& w = ball_->world();
    f.t = w.time();
    f.target = {w.x_lateral(), w.y()};
    f.hands = to_std(w.hands());
    f.q = to_std(w.q());
    f.cost = ball_->last_cost();
  } else {
    f.t = handover_->time();
    f.target = {partner_[0], partner_[1]};
    f.hands = to_std(handover_->hands());
    f.q = to_std(handover_->q());
  }
  return f;
}

ReplayResult replay(BridgeCore& core, const std::vector<ControlMessage>& messages, long ticks) {
  ReplayResult out;
  for (const ControlMessage& m : messages) {
    if (auto reason = core.enqueue(m)) out.rejected.push_back(error_frame(m.tick.value_or(core.tick() + 1), *reason));
  }
  out.steps.reserve(static_cast<std::size_t>(std::max(0L, ticks)));
  for (long k = 0; k < ticks; ++k) out.steps.push_back(core.step());
  return out;
}

}  // namespace ppmp
