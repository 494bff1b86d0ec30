#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coedit/geometry.hpp"
#include "coedit/model.hpp"
#include "coedit/protocol.hpp"
#include "coedit/resolution.hpp"

namespace coedit {

/// Live tick cadence.
inline constexpr int kTickHz = 90;

using TimeMs = std::int64_t;

/// Server time of tick `tick` on the virtual clock, floor(tick * 1000 / 90).
constexpr TimeMs tick_time_ms(std::int64_t tick) { return tick * 1000 / kTickHz; }

enum class Direction { In, Out };

struct SessionEvent {
  Seq seq = 0;
  TimeMs t_ms = 0;
  /// Sender (in) or recipient (out); empty for broadcasts and the log header.
  std::optional<UserId> user;
  Direction dir = Direction::In;
  nlohmann::json msg;
};

nlohmann::json to_json(const SessionEvent &e);
/// Throws LoadError on schema violations.
SessionEvent event_from_json(const nlohmann::json &j);

struct GrabState {
  UserId owner = 0;
  VertexId vertex = 0;
  OperationKind op = OperationKind::Translate;
  Vec3 pivot;
  /// Handle sample consumed by the previous tick.
  Vec3 prev_sample;
  /// Most recent handle sample; only this one is used at the next tick.
  Vec3 latest_sample;
  Seq seq = 0;
  /// Grabbed vertex position when the grab started.
  Vec3 vertex_start;
  /// Product of the per-tick scale factors applied so far.
  double cumulative_scale = 1.0;
};

struct UserState {
  bool joined = false;
  std::string name;
  VertexSet pending;
  std::optional<VertexSet> group;
  OperationKind op = OperationKind::Translate;
  std::optional<GrabState> grab;

  VertexSet selection() const;
};

enum class ColorState { Available, Mine, Partner, Shared };

std::string_view to_string(ColorState c);

/// Outbound addressee meaning "the connection whose input produced this".
inline constexpr UserId kRequester = -1;

struct Outbound {
  /// Recipient; empty means every joined user.
  std::optional<UserId> to;
  nlohmann::json msg;
};

struct StepResult {
  std::vector<Outbound> outbound;
  /// Malformed input: the transport should close the sender's connection.
  bool drop_connection = false;
  /// Set by join: the id handed to the new connection.
  std::optional<UserId> joined_as;
};

/// Server-authoritative two-user session. Not thread-safe: callers funnel every
/// input through one ordered queue.
class Session {
public:
  Session(WireframeModel model, WireframeModel target, StrategyConfig strategy, TimeMs t_ms = 0);

  /// A connection asks to join; answers welcome or deny(session_full).
  StepResult join(std::string name, TimeMs t_ms);

  /// A raw line from a joined user. Malformed lines answer error{} and request a drop.
  StepResult handle_line(UserId user, std::string_view line, TimeMs t_ms);
  StepResult handle_json(UserId user, const nlohmann::json &j, TimeMs t_ms);
  StepResult handle_message(UserId user, const msg::Inbound &m, TimeMs t_ms);

  /// Releases the grab, cancels the group and tells the partner.
  StepResult disconnect(UserId user, TimeMs t_ms);

  /// Resolves one tick and broadcasts the snapshot.
  StepResult advance_tick(TimeMs t_ms);

  const WireframeModel &model() const { return model_; }
  const WireframeModel &target() const { return target_; }
  const StrategyConfig &strategy() const { return strategy_; }
  const UserState &user(UserId u) const { return users_.at(static_cast<std::size_t>(u)); }
  const LockTable &locks() const { return locks_; }
  std::int64_t tick() const { return tick_; }
  Seq next_seq() const { return next_seq_; }
  const std::vector<SessionEvent> &events() const { return events_; }

  /// Called for every event as it is appended (e.g. to stream the log to disk).
  void set_event_sink(std::function<void(const SessionEvent &)> sink);
  /// Keep events in memory (default true). Long live sessions may turn this off.
  void set_retain_events(bool retain) { retain_events_ = retain; }
  /// Quiet sessions build no events or outbound messages; sequence numbers and
  /// state evolve exactly as in a logged session. Used by bulk simulation.
  void set_quiet(bool quiet) { quiet_ = quiet; }

  std::map<VertexId, ColorState> color_state(UserId viewer) const;
  /// Operation of each user's active grab.
  ActiveOps active_ops() const;
  nlohmann::json snapshot() const;

  /// FNV-1a over positions, selections, groups, grabs and the tick counter.
  std::uint64_t state_hash() const;

  /// Throws std::logic_error if a session invariant does not hold.
  void check_invariants() const;

private:
  Seq log(Direction dir, std::optional<UserId> user, nlohmann::json msg, TimeMs t_ms);
  void send(StepResult &result, std::optional<UserId> to, nlohmann::json msg, TimeMs t_ms);
  void deny(StepResult &result, UserId user, DenyReason reason, Seq seq, TimeMs t_ms);
  TimeMs clamp_time(TimeMs t_ms);

  void on(UserId u, Seq seq, const msg::Select &m, StepResult &r, TimeMs t);
  void on(UserId u, Seq seq, const msg::Deselect &m, StepResult &r, TimeMs t);
  void on(UserId u, Seq seq, const msg::ConfirmGroup &m, StepResult &r, TimeMs t);
  void on(UserId u, Seq seq, const msg::CancelGroup &m, StepResult &r, TimeMs t);
  void on(UserId u, Seq seq, const msg::SetOp &m, StepResult &r, TimeMs t);
  void on(UserId u, Seq seq, const msg::Grab &m, StepResult &r, TimeMs t);
  void on(UserId u, Seq seq, const msg::Move &m, StepResult &r, TimeMs t);
  void on(UserId u, Seq seq, const msg::Release &m, StepResult &r, TimeMs t);
  void on(UserId u, Seq seq, const msg::MatchCheck &m, StepResult &r, TimeMs t);

  void release_grab(UserId u);
  void clear_group(UserId u);
  void rebuild_locks();
  OverlapPartition group_partition() const;
  OverlapPartition group_partition_for(UserId u) const;

  WireframeModel model_;
  WireframeModel target_;
  StrategyConfig strategy_;
  std::array<UserState, kUserCount> users_;
  LockTable locks_;
  std::int64_t tick_ = 0;
  Seq next_seq_ = 0;
  TimeMs last_t_ms_ = 0;
  std::vector<SessionEvent> events_;
  bool retain_events_ = true;
  bool quiet_ = false;
  std::function<void(const SessionEvent &)> sink_;
};

/// Session configuration carried by the first log line.
nlohmann::json session_header(const WireframeModel &model, const WireframeModel &target,
                              const StrategyConfig &strategy);

} // namespace coedit
