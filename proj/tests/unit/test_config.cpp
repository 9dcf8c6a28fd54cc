#include <doctest.h>

#include <string>

#include "ppmp/config.hpp"
#include "ppmp/error.hpp"

using namespace ppmp;
using nlohmann::json;

TEST_CASE("empty document gives the defaults") {
  const TaskConfig c = config_from_json(json::object());
  CHECK(c.task == TaskKind::ball);
  CHECK(config_to_json(c) == config_to_json(TaskConfig{}));
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("unknown keys are rejected at every level") {
  CHECK_THROWS_AS(config_from_json(json{{"sed", 3}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"ball", {{"duraton", 3.0}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"train", {{"schedule", {{{"updates", 1}, {"extra", 2}}}}}}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"task", "juggling"}}), ConfigError);
  try {
    config_from_json(json{{"ball", {{"duraton", 3.0}}}}, "cfg");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("duraton") != std::string::npos);
  }
}

TEST_CASE("wrong value types are rejected") {
  CHECK_THROWS(config_from_json(json{{"seed", "three"}}));
  CHECK_THROWS(config_from_json(json{{"demo", 5}}));
}

TEST_CASE("json round trip preserves every field") {
  for (const char* name : {"ball.json", "handover.json", "footstep.json"}) {
    CAPTURE(name);
    const TaskConfig c = load_config(std::string(PPMP_SOURCE_DIR) + "/configs/" + name);
    CHECK_NOTHROW(c.validate());
    const json once = config_to_json(c);
    CHECK(config_to_json(config_from_json(once)) == once);
  }
}

TEST_CASE("validation catches bad values") {
  TaskConfig c;
  c.policy.basis_count = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TaskConfig{};
  c.demo.handover_load = "half";
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TaskConfig{};
  c.augment.sigma = -1.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = TaskConfig{};
  c.handover_eval.stiffness.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("derived settings") {
  TaskConfig c = config_from_json(json{{"task", "handover"}, {"seed", 9}});
  CHECK(c.mode() == PhaseMode::single_stroke);
  CHECK(c.augment_options().seed == 9);
  CHECK(c.search_config(1).noise_variance.size() == 2 * c.policy.basis_count);
  const double empty = c.handover_giver_duration();
  c.demo.handover_load = "full";
  CHECK(c.handover_giver_duration() > empty);
}
