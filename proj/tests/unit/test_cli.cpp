#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::path(PPMP_TEST_TMP) / "cli";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

Result cli(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = "cd '" + scratch().string() + "' && '" + PPMP_CLI + "' " + args + " >'" + out.string() +
                          "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

void write(const fs::path& p, const std::string& text) {
  std::ofstream(scratch() / p) << text;
}

// Every file below `dir`, by relative path.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(scratch() / dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), scratch() / dir).string()] = slurp(e.path());
  }
  return files;
}

// Drops the wall-time column of a comparison table.
std::string without_plan_ms(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::string out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

// Runs the command twice into the same output directory and compares every artifact.
void check_deterministic(const std::string& args, const std::string& out) {
  CAPTURE(args);
  fs::remove_all(scratch() / out);
  const Result a = cli(args + " --out " + out);
  REQUIRE(a.code == 0);
  std::map<std::string, std::string> first = snapshot(out);
  fs::remove_all(scratch() / out);
  const Result b = cli(args + " --out " + out);
  REQUIRE(b.code == 0);
  std::map<std::string, std::string> second = snapshot(out);
  REQUIRE(!first.empty());
  for (auto* files : {&first, &second}) {
    if (files->contains("comparison.csv")) (*files)["comparison.csv"] = without_plan_ms((*files)["comparison.csv"]);
  }
  CHECK(first == second);
}

const char* kBall =
    R"({"task":"ball","seed":5,"ball":{"duration":3.0},"demo":{"count":2},"augment":{"count":10},)"
    R"("train":{"updates":2,"rollouts":3}})";
const char* kHandover = R"({"task":"handover","seed":5,"demo":{"count":2},"augment":{"count":10}})";
const char* kFootstep =
    R"({"task":"footstep","seed":5,"demo":{"count":4},"footstep":{"duration":2.0},"compare":{"budgets":[1,2]}})";

}  // namespace

TEST_CASE("exit codes and structured errors") {
  write("ball.json", kBall);
  REQUIRE(cli("demo-gen --config ball.json --out codes").code == 0);

  SUBCASE("fit on one demonstration") {
    const Result r = cli("fit --config ball.json --demos codes/demo_000.csv --out codes_fit");
    CHECK(r.code == 1);
    CHECK(r.err.find("N < 2") != std::string::npos);
    CHECK(json::parse(r.err).at("error") == "config");
  }
  SUBCASE("unknown flag") { CHECK(cli("fit --config ball.json --frobnicate").code == 1); }
  SUBCASE("missing subcommand") { CHECK(cli("").code == 1); }
  SUBCASE("invalid config") {
    write("bad.json", R"({"ball":{"duraton":3}})");
    const Result r = cli("demo-gen --config bad.json --out codes_bad");
    CHECK(r.code == 1);
    CHECK(r.err.find("duraton") != std::string::npos);
  }
  SUBCASE("augment is not defined for the footstep task") {
    write("footstep.json", kFootstep);
    CHECK(cli("augment --config footstep.json --demo codes/demo_000.csv --out codes_aug").code == 1);
  }
  SUBCASE("runtime failure") {
    write("blocker", "");
    const Result r = cli("demo-gen --config ball.json --out blocker/sub");
    CHECK(r.code == 2);
    CHECK(json::parse(r.err).at("error") == "runtime");
  }
}

TEST_CASE("ball pipeline: determinism and zero-update training") {
  write("ball.json", kBall);
  check_deterministic("demo-gen --config ball.json", "b_demo");
  check_deterministic("augment --config ball.json --demo b_demo/demo_000.csv", "b_aug");
  check_deterministic("fit --config ball.json --demo-dir b_aug", "b_fit");
  check_deterministic("train --config ball.json --portrait b_fit/portrait.json", "b_train");
  check_deterministic("run --config ball.json --portrait b_fit/portrait.json --policy b_train/policy.json", "b_run");
  check_deterministic("eval --config ball.json --portrait b_fit/portrait.json --policy b_train/policy.json", "b_eval");
  write("script.jsonl",
        "{\"kind\":\"grab_target\",\"tick\":3}\n{\"kind\":\"move_target\",\"tick\":4,\"payload\":{\"position\":[0,0.7]}}\n"
        "{\"kind\":\"release_target\",\"tick\":9}\n");
  check_deterministic("serve --config ball.json --portrait b_fit/portrait.json --script script.jsonl --ticks 30",
                      "b_serve");
  const std::string frames = slurp(scratch() / "b_serve/frames.jsonl");
  CHECK(std::count(frames.begin(), frames.end(), '\n') == 30);

  SUBCASE("parallel rollouts give the same policy") {
    REQUIRE(cli("train --config ball.json --portrait b_fit/portrait.json --parallel 3 --out b_par").code == 0);
    // The embedded manifests differ only by their output directory.
    json par = json::parse(slurp(scratch() / "b_par/policy.json"));
    json serial = json::parse(slurp(scratch() / "b_train/policy.json"));
    CHECK(par.at("manifest").at("out") == "b_par");
    par.erase("manifest");
    serial.erase("manifest");
    CHECK(par == serial);
  }
  SUBCASE("train --updates 0 keeps the initial weights") {
    REQUIRE(cli("train --config ball.json --portrait b_fit/portrait.json --updates 0 --out b_zero").code == 0);
    const json p = json::parse(slurp(scratch() / "b_zero/policy.json"));
    for (double k : p.at("w_K").get<std::vector<double>>()) CHECK(k == 30.0);
    for (double a : p.at("w_alpha").get<std::vector<double>>()) CHECK(a == doctest::Approx(45.0 * M_PI / 180.0).epsilon(1e-15));
  }
  SUBCASE("every artifact records its manifest") {
    const json m = json::parse(slurp(scratch() / "b_train/manifest.json"));
    CHECK(m.at("command") == "train");
    CHECK(m.at("seed") == 5);
    CHECK(m.at("inputs").size() == 1);
    CHECK(json::parse(slurp(scratch() / "b_train/policy.json")).at("manifest") == m);
    CHECK(json::parse(slurp(scratch() / "b_eval/metrics.json")).contains("manifest"));
  }
  SUBCASE("seed flag overrides the config") {
    REQUIRE(cli("demo-gen --config ball.json --seed 6 --out b_seed").code == 0);
    CHECK(json::parse(slurp(scratch() / "b_seed/manifest.json")).at("seed") == 6);
  }
}

TEST_CASE("handover and footstep commands are deterministic") {
  write("handover.json", kHandover);
  check_deterministic("demo-gen --config handover.json", "h_demo");
  check_deterministic("augment --config handover.json --demo h_demo/demo_000.csv", "h_aug");
  check_deterministic("fit --config handover.json --demo-dir h_aug", "h_fit");
  check_deterministic("run --config handover.json --portrait h_fit/portrait.json", "h_run");
  check_deterministic("eval --config handover.json --portrait h_fit/portrait.json", "h_eval");

  write("footstep.json", kFootstep);
  check_deterministic("demo-gen --config footstep.json", "f_demo");
  check_deterministic("fit --config footstep.json --demo-dir f_demo", "f_fit");
  check_deterministic("run --config footstep.json --portrait f_fit/portrait.json", "f_run");
  check_deterministic("eval --config footstep.json --portrait f_fit/portrait.json", "f_eval");
  check_deterministic("compare-dmp --config footstep.json --portrait f_fit/portrait.json", "f_cmp");
}
