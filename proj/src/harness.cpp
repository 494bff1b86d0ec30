#include "coedit/harness.hpp"

#include <fstream>

namespace coedit {

using nlohmann::json;

void validate(const Scenario &scenario) {
  if (scenario.model.vertex_count() != scenario.target.vertex_count()) {
    throw LoadError("scenario model and target have different vertex sets");
  }
  for (std::size_t i = 0; i < scenario.actions.size(); ++i) {
    const ScenarioAction &a = scenario.actions[i];
    if (a.t_ms < 0) {
      throw LoadError("action " + std::to_string(i) + " has a negative timestamp");
    }
    if (a.user < 0 || a.user >= kUserCount) {
      throw LoadError("action " + std::to_string(i) + " names user " + std::to_string(a.user));
    }
    if (i > 0) {
      const ScenarioAction &prev = scenario.actions[i - 1];
      if (a.t_ms < prev.t_ms || (a.t_ms == prev.t_ms && a.user < prev.user)) {
        throw LoadError("actions must be sorted by t_ms, then user (action " + std::to_string(i) +
                        ")");
      }
    }
  }
}

namespace {

WireframeModel model_ref(const json &ref, const std::filesystem::path &base_dir) {
  if (ref.is_string()) {
    const std::filesystem::path p = ref.get<std::string>();
    return load_model(p.is_absolute() ? p : base_dir / p);
  }
  return model_from_json(ref);
}

} // namespace

Scenario scenario_from_json(const json &j, const std::filesystem::path &base_dir) {
  Scenario s;
  try {
    s.model = model_ref(j.at("model"), base_dir);
    s.target = j.contains("target") ? model_ref(j.at("target"), base_dir) : s.model;
    s.strategy.kind = parse_strategy(j.at("strategy").get<std::string>());
    for (const json &a : j.at("actions")) {
      s.actions.push_back({a.at("t_ms").get<TimeMs>(), a.at("user").get<UserId>(), a.at("msg")});
    }
  } catch (const json::exception &e) {
    throw LoadError(std::string("malformed scenario: ") + e.what());
  } catch (const ProtocolError &e) {
    throw LoadError(std::string("malformed scenario: ") + e.what());
  }
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open scenario " + path.string());
  }
  const json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw LoadError(path.string() + " is not valid JSON");
  }
  return scenario_from_json(j, path.parent_path());
}

json to_json(const Scenario &scenario) {
  json actions = json::array();
  for (const ScenarioAction &a : scenario.actions) {
    actions.push_back({{"t_ms", a.t_ms}, {"user", a.user}, {"msg", a.msg}});
  }
  return {{"model", to_json(scenario.model)},
          {"target", to_json(scenario.target)},
          {"strategy", to_string(scenario.strategy.kind)},
          {"actions", std::move(actions)}};
}

void save_scenario(const Scenario &scenario, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) {
    throw LoadError("cannot write " + path.string());
  }
  out << to_json(scenario).dump(1) << '\n';
}

Driver::Driver(const WireframeModel &model, const WireframeModel &target, StrategyConfig strategy,
               bool quiet)
    : session_(model, target, strategy, 0) {
  session_.set_quiet(quiet);
  for (UserId u = 0; u < kUserCount; ++u) {
    const StepResult r = session_.join("user" + std::to_string(u), 0);
    slot_[u] = r.joined_as;
    record(r);
  }
}

void Driver::record(const StepResult &result) {
  for (const Outbound &out : result.outbound) {
    const json &type = out.msg.at("type");
    if (type == "deny") {
      ++deny_count_;
    } else if (type == "state") {
      for (UserId u = 0; u < kUserCount; ++u) {
        if (session_.user(u).joined) {
          last_snapshot_[u] = out.msg;
        }
      }
    }
  }
}

void Driver::advance_to(TimeMs t_ms) {
  // Tick k fires at k * 1000 / kTickHz ms; an action at t precedes it iff t * kTickHz < k * 1000.
  while ((session_.tick() + 1) * 1000 <= t_ms * kTickHz) {
    record(session_.advance_tick(tick_time_ms(session_.tick() + 1)));
  }
}

StepResult Driver::deliver(const ScenarioAction &action) {
  advance_to(action.t_ms);
  std::optional<UserId> &slot = slot_[action.user];
  const bool is_join =
      action.msg.is_object() && action.msg.contains("type") && action.msg["type"] == "join";
  StepResult result;
  if (!slot) {
    // The connection is gone; only a fresh join gets through, into whichever slot is free.
    if (is_join) {
      const json &name = action.msg.contains("name") ? action.msg["name"] : json("");
      result = session_.join(name.is_string() ? name.get<std::string>() : std::string{},
                             action.t_ms);
      slot = result.joined_as;
    }
  } else if (action.msg.is_string()) {
    result = session_.handle_line(*slot, action.msg.get_ref<const std::string &>(), action.t_ms);
  } else {
    result = session_.handle_json(*slot, action.msg, action.t_ms);
  }
  record(result);
  if (result.drop_connection) {
    record(session_.disconnect(*slot, action.t_ms));
    slot.reset();
  }
  return result;
}

void Driver::flush() { record(session_.advance_tick(tick_time_ms(session_.tick() + 1))); }

namespace {

RunResult run_impl(const Scenario &scenario, bool quiet) {
  validate(scenario);
  Driver driver(scenario.model, scenario.target, scenario.strategy, quiet);
  for (const ScenarioAction &a : scenario.actions) {
    driver.deliver(a);
  }
  driver.flush();
  const Session &s = driver.session();
  return {s.model(),          s.events(),   driver.deny_count(),
          s.tick(),           s.state_hash(), driver.last_snapshots()};
}

} // namespace

RunResult run(const Scenario &scenario) { return run_impl(scenario, false); }

RunResult run_quiet(const Scenario &scenario) { return run_impl(scenario, true); }

ReplayResult replay(std::span<const SessionEvent> log, const ReplayObserver &observer) {
  if (log.empty() || log.front().seq != 0 || log.front().dir != Direction::Out ||
      !log.front().msg.is_object() || log.front().msg.value("type", "") != "session_start") {
    throw CorruptLogError("log does not start with a session header");
  }
  for (std::size_t i = 1; i < log.size(); ++i) {
    if (log[i].seq != log[i - 1].seq + 1) {
      throw CorruptLogError("sequence gap after seq " + std::to_string(log[i - 1].seq));
    }
  }
  const json &header = log.front().msg;
  std::optional<Session> session;
  try {
    session.emplace(model_from_json(header.at("model")), model_from_json(header.at("target")),
                    StrategyConfig{parse_strategy(header.at("strategy").get<std::string>())},
                    log.front().t_ms);
  } catch (const std::exception &e) {
    throw CorruptLogError(std::string("bad session header: ") + e.what());
  }
  if (observer) {
    observer(log.front(), *session);
  }
  for (const SessionEvent &e : log.subspan(1)) {
    if (e.dir == Direction::Out) {
      if (e.msg.is_object() && e.msg.value("type", "") == "state") {
        session->advance_tick(e.t_ms);
      }
      if (observer) {
        observer(e, *session);
      }
      continue;
    }
    if (!e.user) {
      if (!e.msg.is_object() || e.msg.value("type", "") != "join") {
        throw CorruptLogError("inbound event " + std::to_string(e.seq) + " has no sender");
      }
      const json name = e.msg.value("name", json(""));
      session->join(name.is_string() ? name.get<std::string>() : std::string{}, e.t_ms);
    } else if (*e.user < 0 || *e.user >= kUserCount || !session->user(*e.user).joined) {
      throw CorruptLogError("inbound event " + std::to_string(e.seq) + " from a user not joined");
    } else if (e.msg.is_string()) {
      session->handle_line(*e.user, e.msg.get_ref<const std::string &>(), e.t_ms);
    } else {
      session->handle_json(*e.user, e.msg, e.t_ms);
    }
    if (observer) {
      observer(e, *session);
    }
  }

  ReplayResult result;
  result.final_model = session->model();
  result.state_hash = session->state_hash();
  result.tick_count = session->tick();
  const auto &regenerated = session->events();
  result.outputs_match = regenerated.size() == log.size();
  for (std::size_t i = 0; result.outputs_match && i < log.size(); ++i) {
    result.outputs_match = to_json(regenerated[i]) == to_json(log[i]);
  }
  return result;
}

std::vector<SessionEvent> load_log(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open log " + path.string());
  }
  std::vector<SessionEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw CorruptLogError(path.string() + ":" + std::to_string(line_no) + ": not JSON");
    }
    events.push_back(event_from_json(j));
  }
  return events;
}

void save_log(std::span<const SessionEvent> log, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) {
    throw LoadError("cannot write " + path.string());
  }
  for (const SessionEvent &e : log) {
    out << to_json(e).dump() << '\n';
  }
}

} // namespace coedit
