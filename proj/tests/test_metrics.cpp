#include <doctest.h>

#include "coedit/harness.hpp"
#include "coedit/metrics.hpp"
#include "coedit/scenariogen.hpp"

using namespace coedit;
using nlohmann::json;

namespace {

// Groups overlap over [10 s, 20 s]; same-op grabs over [12 s, 15 s]; matched at 30 s.
Scenario overlap_scenario() {
  Scenario s;
  s.model = gen_cube();
  s.target = s.model;
  s.strategy.kind = StrategyKind::Additive;
  s.actions = {
      {9000, 0, {{"type", "select"}, {"vertex", 0}}},
      {9000, 0, {{"type", "select"}, {"vertex", 1}}},
      {9500, 1, {{"type", "select"}, {"vertex", 1}}},
      {9500, 1, {{"type", "select"}, {"vertex", 3}}},
      {10000, 0, {{"type", "confirm_group"}}},
      {10000, 1, {{"type", "confirm_group"}}},
      {12000, 0, {{"type", "grab"}, {"vertex", 0}, {"handle", {0, 0, 0}}}},
      {12000, 1, {{"type", "grab"}, {"vertex", 3}, {"handle", {1, 1, 0}}}},
      {15000, 0, {{"type", "release"}}},
      {20000, 0, {{"type", "cancel_group"}}},
      {30000, 1, {{"type", "match_check"}}},
  };
  return s;
}

std::vector<SessionEvent> overlap_log() { return run(overlap_scenario()).log; }

const Episode *find(const std::vector<Episode> &eps, EpisodeKind kind) {
  for (const Episode &e : eps) {
    if (e.kind == kind) {
      return &e;
    }
  }
  return nullptr;
}

std::vector<SessionEvent> retimed(std::vector<SessionEvent> log, TimeMs scale, TimeMs shift) {
  for (SessionEvent &e : log) {
    e.t_ms = e.t_ms * scale + shift;
  }
  return log;
}

} // namespace

TEST_CASE("episodes of a hand-built log") {
  const std::vector<SessionEvent> log = overlap_log();
  const std::vector<Episode> eps = detect_episodes(log);
  REQUIRE(eps.size() == 2);
  const Episode *co = find(eps, EpisodeKind::Concurrent);
  const Episode *same = find(eps, EpisodeKind::SameAction);
  REQUIRE(co);
  REQUIRE(same);
  CHECK(co->start_ms == 10000);
  CHECK(co->end_ms == 20000);
  CHECK(same->start_ms == 12000);
  CHECK(same->end_ms == 15000);

  const LogSummary summary = summarize_log(log);
  CHECK(summary.matched);
  const ModelMetrics m = model_metrics(summary);
  CHECK(m.t == 30.0);
  CHECK(m.t_co == 10.0);
  CHECK(m.t_same == 3.0);
  CHECK(m.n_episodes == 1);

  const std::vector<std::vector<SessionEvent>> logs{log};
  const MetricsReport r = compute_metrics(logs);
  CHECK(r.mean_completion_time == 30.0);
  CHECK(*r.concurrent_time_ratio == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(r.same_action_concurrent_ratio == 0.3);
  CHECK(r.mean_concurrent_duration == 10.0);
}

TEST_CASE("overlap open at the end closes at the last event") {
  Scenario s = overlap_scenario();
  // Stop after the release: the groups still overlap when the log ends.
  s.actions.resize(9);
  const std::vector<SessionEvent> log = run(s).log;
  const std::vector<Episode> eps = detect_episodes(log);
  const Episode *co = find(eps, EpisodeKind::Concurrent);
  REQUIRE(co);
  CHECK(co->start_ms == 10000);
  CHECK(co->end_ms == log.back().t_ms);
  CHECK_FALSE(summarize_log(log).matched);
}

TEST_CASE("formulas") {
  SUBCASE("worked example") {
    const std::vector<ModelMetrics> models{{100.0, 10.0, 4.0, 1, true}};
    const MetricsReport r = compute_metrics(models);
    CHECK(r.mean_completion_time == 100.0);
    CHECK(r.concurrent_time_ratio == 0.1);
    CHECK(r.same_action_concurrent_ratio == 0.4);
    CHECK(r.mean_concurrent_duration == 10.0);
  }
  SUBCASE("no concurrency") {
    const std::vector<ModelMetrics> models{{50.0, 0.0, 0.0, 0, true}};
    const MetricsReport r = compute_metrics(models);
    CHECK(r.concurrent_time_ratio == 0.0);
    CHECK_FALSE(r.same_action_concurrent_ratio);
    CHECK_FALSE(r.mean_concurrent_duration);
    const json j = to_json(r);
    CHECK(j.at("same_action_concurrent_ratio").is_null());
    CHECK(j.at("mean_concurrent_duration_s").is_null());
  }
  SUBCASE("two identical models") {
    const std::vector<ModelMetrics> models{{40.0, 8.0, 2.0, 2, true}, {40.0, 8.0, 2.0, 2, true}};
    const MetricsReport r = compute_metrics(models);
    CHECK(r.mean_completion_time == 40.0);
    CHECK(r.total_time == 80.0);
    CHECK(r.concurrent_time_ratio == 0.2);
    CHECK(r.mean_concurrent_duration == 4.0);
  }
  SUBCASE("no models") {
    const MetricsReport r = compute_metrics(std::span<const ModelMetrics>{});
    CHECK_FALSE(r.mean_completion_time);
  }
}

TEST_CASE("time translation and scaling") {
  const std::vector<SessionEvent> log = overlap_log();
  const std::vector<std::vector<SessionEvent>> base{log};
  const std::vector<std::vector<SessionEvent>> shifted{retimed(log, 1, 123456)};
  const std::vector<std::vector<SessionEvent>> doubled{retimed(log, 2, 0)};
  const MetricsReport a = compute_metrics(base);
  const MetricsReport b = compute_metrics(shifted);
  const MetricsReport c = compute_metrics(doubled);
  CHECK(to_json(a) == to_json(b));
  CHECK(*c.mean_completion_time == 2 * *a.mean_completion_time);
  CHECK(*c.mean_concurrent_duration == 2 * *a.mean_concurrent_duration);
  CHECK(c.concurrent_time_ratio == a.concurrent_time_ratio);
  CHECK(c.same_action_concurrent_ratio == a.same_action_concurrent_ratio);
}

TEST_CASE("random logs satisfy the identities") {
  std::vector<std::vector<SessionEvent>> logs;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    logs.push_back(run(random_scenario(seed, StrategyKind::Averaging)).log);
  }
  const MetricsReport r = compute_metrics(logs);
  double t_co = 0;
  double t_same = 0;
  std::size_t n = 0;
  for (const ModelMetrics &m : r.models) {
    t_co += m.t_co;
    t_same += m.t_same;
    n += m.n_episodes;
  }
  REQUIRE(r.concurrent_time_ratio);
  CHECK(*r.concurrent_time_ratio >= 0.0);
  CHECK(*r.concurrent_time_ratio <= 1.0);
  CHECK(t_same <= t_co);
  if (n > 0) {
    CHECK(*r.mean_concurrent_duration * static_cast<double>(n) ==
          doctest::Approx(t_co).epsilon(1e-12));
  }
}
