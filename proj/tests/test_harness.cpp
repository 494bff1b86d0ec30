#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "coedit/harness.hpp"
#include "coedit/scenariogen.hpp"

using namespace coedit;
using nlohmann::json;

namespace {

std::filesystem::path temp_path(const std::string &name) {
  return std::filesystem::temp_directory_path() / ("coedit_test_" + name);
}

Scenario translate_scenario(StrategyKind kind) {
  Scenario s;
  s.model = gen_cube();
  s.target = s.model;
  s.strategy.kind = kind;
  s.actions = {
      {0, 0, {{"type", "select"}, {"vertex", 0}}},
      {5, 0, {{"type", "confirm_group"}}},
      {10, 0, {{"type", "grab"}, {"vertex", 0}, {"handle", {0, 0, 0}}}},
      {20, 0, {{"type", "move"}, {"handle", {0.1, 0, 0}}}},
      {40, 0, {{"type", "move"}, {"handle", {0.2, 0.1, 0}}}},
      {60, 0, {{"type", "release"}}},
  };
  return s;
}

} // namespace

TEST_CASE("empty scenario leaves the model alone") {
  Scenario s;
  s.model = gen_cube();
  s.target = s.model;
  const RunResult r = run(s);
  CHECK(r.final_model.positions == s.model.positions);
  CHECK(r.tick_count == 1);
  CHECK(r.deny_count == 0);
  const ReplayResult back = replay(r.log);
  CHECK(back.final_model.positions == s.model.positions);
  CHECK(back.outputs_match);
}

TEST_CASE("scripted translation") {
  const RunResult r = run(translate_scenario(StrategyKind::Averaging));
  CHECK(r.final_model.positions[0] == Vec3{0.2, 0.1, 0});
  CHECK(r.final_model.positions[1] == Vec3{1, 0, 0});
  CHECK(r.last_snapshots[0].at("type") == "state");
  CHECK(run_quiet(translate_scenario(StrategyKind::Averaging)).state_hash == r.state_hash);
  CHECK(oracle_resolve(translate_scenario(StrategyKind::Averaging)).positions ==
        r.final_model.positions);
}

TEST_CASE("validation") {
  Scenario s = translate_scenario(StrategyKind::Additive);
  CHECK_NOTHROW(validate(s));
  SUBCASE("unsorted") {
    std::swap(s.actions[1], s.actions[2]);
    CHECK_THROWS_AS(validate(s), LoadError);
  }
  SUBCASE("same time sorts by user") {
    s.actions = {{5, 1, {{"type", "release"}}}, {5, 0, {{"type", "release"}}}};
    CHECK_THROWS_AS(validate(s), LoadError);
  }
  SUBCASE("bad user") {
    s.actions[0].user = 2;
    CHECK_THROWS_AS(run(s), LoadError);
  }
  SUBCASE("negative time") {
    s.actions[0].t_ms = -1;
    CHECK_THROWS_AS(validate(s), LoadError);
  }
  SUBCASE("missing fields") {
    CHECK_THROWS_AS(scenario_from_json(json{{"model", to_json(gen_cube())}}, "."), LoadError);
  }
}

TEST_CASE("scenario and log files round-trip") {
  const Scenario s = random_scenario(17, StrategyKind::Intersection);
  const auto scenario_path = temp_path("scenario.json");
  save_scenario(s, scenario_path);
  const Scenario back = load_scenario(scenario_path);
  CHECK(to_json(back) == to_json(s));

  const RunResult r = run(s);
  const auto log_path = temp_path("log.jsonl");
  save_log(r.log, log_path);
  const std::vector<SessionEvent> loaded = load_log(log_path);
  REQUIRE(loaded.size() == r.log.size());
  const ReplayResult rep = replay(loaded);
  CHECK(rep.state_hash == r.state_hash);
  CHECK(rep.outputs_match);

  SUBCASE("model referenced by path") {
    const auto model_path = temp_path("model.json");
    save_model(s.model, model_path);
    json j = to_json(s);
    j["model"] = model_path.filename().string();
    j.erase("target");
    const Scenario by_ref = scenario_from_json(j, model_path.parent_path());
    CHECK(by_ref.model.positions == s.model.positions);
    CHECK(by_ref.target.positions == s.model.positions);
    std::filesystem::remove(model_path);
  }
  SUBCASE("a garbage line is a corrupt log") {
    std::ofstream(log_path, std::ios::app) << "{{{\n";
    CHECK_THROWS_AS(load_log(log_path), CorruptLogError);
  }
  std::filesystem::remove(scenario_path);
  std::filesystem::remove(log_path);
  CHECK_THROWS_AS(load_scenario(scenario_path), LoadError);
}

TEST_CASE("replay rejects damaged logs") {
  std::vector<SessionEvent> log = run(translate_scenario(StrategyKind::Averaging)).log;
  SUBCASE("deleted line") {
    log.erase(log.begin() + static_cast<std::ptrdiff_t>(log.size() / 2));
    CHECK_THROWS_AS(replay(log), CorruptLogError);
  }
  SUBCASE("missing header") {
    log.erase(log.begin());
    CHECK_THROWS_AS(replay(log), CorruptLogError);
  }
  SUBCASE("empty") { CHECK_THROWS_AS(replay({}), CorruptLogError); }
  SUBCASE("tampered output") {
    log.back().msg["tick"] = 999;
    CHECK_FALSE(replay(log).outputs_match);
  }
}

TEST_CASE("replay observer sees every event") {
  const RunResult r = run(translate_scenario(StrategyKind::Averaging));
  std::size_t seen = 0;
  replay(r.log, [&](const SessionEvent &e, const Session &) {
    CHECK(e.seq == seen);
    ++seen;
  });
  CHECK(seen == r.log.size());
}

TEST_CASE("a dropped user can come back") {
  Scenario s = translate_scenario(StrategyKind::Averaging);
  s.actions.push_back({70, 0, json("not json")});
  s.actions.push_back({80, 0, {{"type", "select"}, {"vertex", 1}}});
  s.actions.push_back({90, 0, {{"type", "join"}, {"name", "again"}}});
  s.actions.push_back({100, 0, {{"type", "select"}, {"vertex", 1}}});
  const RunResult r = run(s);
  CHECK(r.last_snapshots[0].at("selections").at("0") == json::array({1}));
  CHECK(replay(r.log).outputs_match);
  CHECK(oracle_resolve(s).positions == r.final_model.positions);
}

TEST_CASE("random scenarios are reproducible and bounded") {
  const Scenario a = random_scenario(5, StrategyKind::Additive);
  const Scenario b = random_scenario(5, StrategyKind::Additive);
  CHECK(to_json(a) == to_json(b));
  CHECK_NOTHROW(validate(a));
  CHECK(a.model.vertex_count() == 8);
  CHECK(a.actions.back().t_ms <= 20000);
  CHECK(to_json(random_scenario(6, StrategyKind::Additive)) != to_json(a));
}

TEST_CASE("fuzz smoke") {
  const FuzzReport r = fuzz(3, 500, StrategyKind::Averaging);
  CHECK(r.violations.empty());
  CHECK(r.messages == 500);
  CHECK(r.ticks > 0);
}
