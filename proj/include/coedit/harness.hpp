#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "coedit/model.hpp"
#include "coedit/resolution.hpp"
#include "coedit/session.hpp"

namespace coedit {

struct ScenarioAction {
  TimeMs t_ms = 0;
  UserId user = 0;
  nlohmann::json msg;
};

/// A scripted two-client session. Both users join at t = 0 before any action.
struct Scenario {
  WireframeModel model;
  WireframeModel target;
  StrategyConfig strategy;
  /// Sorted by t_ms, then user.
  std::vector<ScenarioAction> actions;
};

/// Throws LoadError unless actions are time-sorted with users in {0, 1}.
void validate(const Scenario &scenario);

/// Models may be inline objects or file paths relative to `base_dir`.
Scenario scenario_from_json(const nlohmann::json &j,
                            const std::filesystem::path &base_dir = {});
Scenario load_scenario(const std::filesystem::path &path);
/// Models are written inline.
nlohmann::json to_json(const Scenario &scenario);
void save_scenario(const Scenario &scenario, const std::filesystem::path &path);

/// Owns a session and plays the transport's part: joins, ticks on the virtual
/// clock, drops connections after malformed input.
class Driver {
public:
  Driver(const WireframeModel &model, const WireframeModel &target, StrategyConfig strategy,
         bool quiet = false);

  /// Fires every tick whose boundary is at or before `t_ms`.
  void advance_to(TimeMs t_ms);
  /// Delivers one action at its timestamp. Ticks due before it fire first.
  StepResult deliver(const ScenarioAction &action);
  /// One extra tick after the last action so trailing samples are applied.
  void flush();

  Session &session() { return session_; }
  const Session &session() const { return session_; }
  std::size_t deny_count() const { return deny_count_; }
  /// Last state snapshot each user received.
  const std::array<nlohmann::json, kUserCount> &last_snapshots() const { return last_snapshot_; }

private:
  void record(const StepResult &result);

  Session session_;
  /// Session user id held by each scripted client; clients that rejoin take the free slot.
  std::array<std::optional<UserId>, kUserCount> slot_;
  std::size_t deny_count_ = 0;
  std::array<nlohmann::json, kUserCount> last_snapshot_;
};

struct RunResult {
  WireframeModel final_model;
  std::vector<SessionEvent> log;
  std::size_t deny_count = 0;
  std::int64_t tick_count = 0;
  std::uint64_t state_hash = 0;
  std::array<nlohmann::json, kUserCount> last_snapshots;
};

/// Deterministic: no wall clock, identical scenarios give identical results.
RunResult run(const Scenario &scenario);
/// As run(), without building the event log.
RunResult run_quiet(const Scenario &scenario);

class CorruptLogError : public LoadError {
public:
  using LoadError::LoadError;
};

struct ReplayResult {
  WireframeModel final_model;
  std::uint64_t state_hash = 0;
  std::int64_t tick_count = 0;
  /// Every regenerated event equals the logged one.
  bool outputs_match = false;
};

/// Invoked for every logged event, after any state change it caused.
using ReplayObserver = std::function<void(const SessionEvent &, const Session &)>;

/// Re-applies inbound events in seq order and fires a tick for every logged
/// state broadcast. Throws CorruptLogError on sequence gaps or a missing header.
ReplayResult replay(std::span<const SessionEvent> log, const ReplayObserver &observer = {});

std::vector<SessionEvent> load_log(const std::filesystem::path &path);
void save_log(std::span<const SessionEvent> log, const std::filesystem::path &path);

/// Independent brute-force re-execution of a scenario: own state machine, per-vertex
/// enumeration of displacement fields, literal combination rules.
WireframeModel oracle_resolve(const Scenario &scenario);

struct RandomScenarioOptions {
  TimeMs max_duration_ms = 20000;
  /// Each user's vertex picks come from a shared pool to force overlap.
  double overlap_bias = 0.6;
  /// Probability of a deliberately invalid or out-of-place message.
  double noise = 0.03;
};

/// Seeded two-user scenario on a jittered unit cube (8 vertices).
Scenario random_scenario(std::uint64_t seed, StrategyKind strategy,
                         const RandomScenarioOptions &options = {});

struct FuzzReport {
  std::size_t messages = 0;
  std::size_t ticks = 0;
  std::size_t denies = 0;
  std::size_t protocol_errors = 0;
  /// Safety or invariant violations, each described in one line.
  std::vector<std::string> violations;
};

/// Drives `messages` random (often malformed) protocol messages and checks the
/// session invariants after every step.
FuzzReport fuzz(std::uint64_t seed, std::size_t messages, StrategyKind strategy);

/// Scripted two-client solution that moves every vertex onto the target, one
/// single-vertex group at a time per user, then asks for a match check.
Scenario scripted_solution(const WireframeModel &model, const WireframeModel &target,
                           StrategyKind strategy);

} // namespace coedit
