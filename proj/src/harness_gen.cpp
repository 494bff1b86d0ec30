#include <algorithm>
#include <string>

#include "coedit/harness.hpp"
#include "coedit/rng.hpp"
#include "coedit/scenariogen.hpp"

namespace coedit {

using nlohmann::json;

namespace {

WireframeModel jittered_cube(Rng &rng) {
  WireframeModel cube = gen_cube();
  for (Vec3 &p : cube.positions) {
    for (int axis = 0; axis < 3; ++axis) {
      p[axis] += rng.uniform(-0.05, 0.05);
    }
  }
  return cube;
}

json handle_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }

const char *const kOps[] = {"translate", "rotate", "scale"};

/// Appends one user's timeline of select / grab / drag / release episodes.
class Timeline {
public:
  Timeline(UserId user, Rng &rng, const RandomScenarioOptions &options, const WireframeModel &model)
      : user_(user), rng_(rng), options_(options), model_(model) {}

  std::vector<ScenarioAction> build() {
    t_ = rng_.between(0, 200);
    while (t_ < options_.max_duration_ms) {
      episode();
    }
    return std::move(actions_);
  }

private:
  void emit(json msg, int gap_lo = 5, int gap_hi = 120) {
    if (rng_.chance(options_.noise)) {
      noise();
    }
    actions_.push_back({t_, user_, std::move(msg)});
    t_ += rng_.between(gap_lo, gap_hi);
  }

  void noise() {
    switch (rng_.below(6)) {
    case 0:
      actions_.push_back({t_, user_, json{{"type", "select"}, {"vertex", 99}}});
      break;
    case 1:
      actions_.push_back({t_, user_, json{{"type", "grab"}, {"vertex", 0}, {"handle", {0, 0, 0}}}});
      break;
    case 2:
      actions_.push_back({t_, user_, json{{"type", "match_check"}}});
      break;
    case 3:
      actions_.push_back({t_, user_, json{{"type", "cancel_group"}}});
      break;
    case 4:
      // Malformed line: the connection drops and the client comes back.
      actions_.push_back({t_, user_, json("{\"type\": \"sel")});
      actions_.push_back({t_ + 1, user_, json{{"type", "join"}, {"name", "rejoin"}}});
      t_ += 2;
      break;
    default:
      actions_.push_back({t_, user_, json{{"type", "teleport"}}});
      actions_.push_back({t_ + 1, user_, json{{"type", "join"}, {"name", "rejoin"}}});
      t_ += 2;
      break;
    }
  }

  VertexId pick_vertex() {
    // Vertices 0..3 form the contested pool.
    const std::uint64_t n = rng_.chance(options_.overlap_bias) ? 4 : model_.vertex_count();
    return static_cast<VertexId>(rng_.below(n));
  }

  void episode() {
    std::vector<VertexId> group;
    const int size = rng_.between(1, 4);
    for (int i = 0; i < size; ++i) {
      const VertexId v = pick_vertex();
      group.push_back(v);
      emit({{"type", "select"}, {"vertex", v}});
    }
    if (rng_.chance(0.1)) {
      emit({{"type", "deselect"}, {"vertex", group.back()}});
      group.pop_back();
    }
    emit({{"type", "confirm_group"}});
    emit({{"type", "set_op"}, {"op", kOps[rng_.below(3)]}});
    const int grabs = rng_.between(1, 2);
    for (int g = 0; g < grabs && !group.empty(); ++g) {
      const VertexId v = group[rng_.below(group.size())];
      Vec3 handle = model_.positions[v];
      emit({{"type", "grab"}, {"vertex", v}, {"handle", handle_json(handle)}}, 1, 20);
      const int moves = rng_.between(3, 40);
      for (int m = 0; m < moves; ++m) {
        for (int axis = 0; axis < 3; ++axis) {
          handle[axis] += rng_.uniform(-0.02, 0.02);
        }
        emit({{"type", "move"}, {"handle", handle_json(handle)}}, 8, 14);
      }
      if (rng_.chance(0.8)) {
        emit({{"type", "release"}}, 10, 60);
      }
    }
    if (rng_.chance(0.15)) {
      emit({{"type", "match_check"}});
    }
    emit({{"type", "cancel_group"}}, 20, 400);
  }

  UserId user_;
  Rng &rng_;
  const RandomScenarioOptions &options_;
  const WireframeModel &model_;
  TimeMs t_ = 0;
  std::vector<ScenarioAction> actions_;
};

std::vector<ScenarioAction> merge(std::vector<ScenarioAction> a, std::vector<ScenarioAction> b) {
  a.insert(a.end(), std::make_move_iterator(b.begin()), std::make_move_iterator(b.end()));
  std::stable_sort(a.begin(), a.end(), [](const ScenarioAction &x, const ScenarioAction &y) {
    return x.t_ms != y.t_ms ? x.t_ms < y.t_ms : x.user < y.user;
  });
  return a;
}

} // namespace

Scenario random_scenario(std::uint64_t seed, StrategyKind strategy,
                         const RandomScenarioOptions &options) {
  Rng rng(seed);
  Scenario s;
  s.model = jittered_cube(rng);
  s.target = s.model;
  s.strategy.kind = strategy;
  std::vector<ScenarioAction> first = Timeline(0, rng, options, s.model).build();
  std::vector<ScenarioAction> second = Timeline(1, rng, options, s.model).build();
  s.actions = merge(std::move(first), std::move(second));
  std::erase_if(s.actions,
                [&](const ScenarioAction &a) { return a.t_ms > options.max_duration_ms; });
  return s;
}

namespace {

json random_vertex_field(Rng &rng) {
  switch (rng.below(8)) {
  case 0:
    return "3";
  case 1:
    return -1;
  case 2:
    return 8 + static_cast<int>(rng.below(4));
  case 3:
    return 2.5;
  default:
    return static_cast<int>(rng.below(8));
  }
}

json random_handle(Rng &rng, const Session &session) {
  switch (rng.below(10)) {
  case 0:
    return json::array({0, 1});
  case 1:
    return "up";
  case 2: {
    // Right on top of a vertex or the cube centre.
    const Vec3 &p = session.model().positions[rng.below(8)];
    return handle_json(rng.chance(0.5) ? p : Vec3{0.5, 0.5, 0.5});
  }
  case 3:
    return handle_json({rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-50, 50)});
  default:
    return handle_json({rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5), rng.uniform(-0.5, 1.5)});
  }
}

json random_message(Rng &rng, const Session &session) {
  switch (rng.below(16)) {
  case 0:
  case 1:
    return {{"type", "select"}, {"vertex", random_vertex_field(rng)}};
  case 2:
    return {{"type", "deselect"}, {"vertex", random_vertex_field(rng)}};
  case 3:
    return {{"type", "confirm_group"}};
  case 4:
    return {{"type", "cancel_group"}};
  case 5:
    return {{"type", "set_op"},
            {"op", rng.chance(0.9) ? json(kOps[rng.below(3)]) : json("shear")}};
  case 6:
  case 7:
    return {{"type", "grab"}, {"vertex", random_vertex_field(rng)},
            {"handle", random_handle(rng, session)}};
  case 8:
  case 9:
  case 10:
    return {{"type", "move"}, {"handle", random_handle(rng, session)}};
  case 11:
    return {{"type", "release"}};
  case 12:
    return {{"type", "match_check"}};
  case 13:
    return rng.chance(0.5) ? json("{not json") : json("[1, 2");
  case 14:
    return rng.chance(0.5) ? json{{"type", "join"}, {"name", "again"}} : json(42);
  default:
    return {{"kind", "select"}, {"vertex", 1}};
  }
}

} // namespace

FuzzReport fuzz(std::uint64_t seed, std::size_t messages, StrategyKind strategy) {
  Rng rng(seed);
  const WireframeModel cube = jittered_cube(rng);
  Session session(cube, cube, StrategyConfig{strategy}, 0);
  session.set_retain_events(false);
  FuzzReport report;
  TimeMs t = 0;
  auto check = [&](const std::string &context) {
    try {
      session.check_invariants();
    } catch (const std::logic_error &e) {
      report.violations.push_back(context + ": " + e.what());
    }
    for (const Vec3 &p : session.model().positions) {
      if (!is_finite(p)) {
        report.violations.push_back(context + ": non-finite vertex position");
        break;
      }
    }
  };
  auto count = [&](const StepResult &r) {
    for (const Outbound &o : r.outbound) {
      if (o.msg.at("type") == "deny") {
        ++report.denies;
      }
    }
  };
  for (UserId u = 0; u < kUserCount; ++u) {
    count(session.join("fuzz" + std::to_string(u), t));
  }
  for (std::size_t i = 0; i < messages; ++i) {
    const std::string context = "message " + std::to_string(i);
    t += static_cast<TimeMs>(rng.below(8));
    while (session.tick() + 1 <= t * kTickHz / 1000) {
      try {
        session.advance_tick(tick_time_ms(session.tick() + 1));
        ++report.ticks;
      } catch (const std::exception &e) {
        report.violations.push_back(context + ": tick threw " + e.what());
      }
      check(context + " tick");
    }
    const auto user = static_cast<UserId>(rng.below(kUserCount));
    const json m = random_message(rng, session);
    try {
      StepResult r;
      if (!session.user(user).joined) {
        r = session.join("fuzz", t);
      } else if (m.is_string()) {
        r = session.handle_line(user, m.get_ref<const std::string &>(), t);
      } else {
        r = session.handle_json(user, m, t);
      }
      ++report.messages;
      count(r);
      if (r.drop_connection) {
        ++report.protocol_errors;
        session.disconnect(user, t);
      }
    } catch (const std::exception &e) {
      report.violations.push_back(context + ": unexpected exception " + e.what());
    }
    check(context);
  }
  return report;
}

Scenario scripted_solution(const WireframeModel &model, const WireframeModel &target,
                           StrategyKind strategy) {
  if (model.vertex_count() != target.vertex_count()) {
    throw DomainError("model and target must share vertex ids");
  }
  constexpr int kSteps = 10;
  std::array<std::vector<ScenarioAction>, kUserCount> lanes;
  std::array<TimeMs, kUserCount> clock{10, 15};
  for (std::size_t i = 0; i < model.vertex_count(); ++i) {
    const Vec3 &from = model.positions[i];
    const Vec3 &to = target.positions[i];
    if (from == to) {
      continue;
    }
    const auto u = static_cast<UserId>(i % kUserCount);
    auto &lane = lanes[u];
    TimeMs &t = clock[u];
    const auto v = static_cast<VertexId>(i);
    lane.push_back({t, u, {{"type", "select"}, {"vertex", v}}});
    lane.push_back({t += 20, u, {{"type", "confirm_group"}}});
    lane.push_back({t += 20, u, {{"type", "set_op"}, {"op", "translate"}}});
    lane.push_back({t += 20, u, {{"type", "grab"}, {"vertex", v}, {"handle", handle_json(from)}}});
    for (int k = 1; k <= kSteps; ++k) {
      const Vec3 h = k == kSteps ? to : from + (to - from) * (static_cast<double>(k) / kSteps);
      lane.push_back({t += 20, u, {{"type", "move"}, {"handle", handle_json(h)}}});
    }
    lane.push_back({t += 40, u, {{"type", "release"}}});
    lane.push_back({t += 20, u, {{"type", "cancel_group"}}});
    t += 20;
  }
  Scenario s;
  s.model = model;
  s.target = target;
  s.strategy.kind = strategy;
  s.actions = merge(std::move(lanes[0]), std::move(lanes[1]));
  const TimeMs end = std::max(clock[0], clock[1]) + 50;
  s.actions.push_back({end, 0, {{"type", "match_check"}}});
  return s;
}

} // namespace coedit
