#include "coedit/session.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>

namespace coedit {

using nlohmann::json;

namespace {

class Fnv1a {
public:
  void add(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      hash_ ^= (v >> (8 * i)) & 0xffu;
      hash_ *= 0x100000001b3ull;
    }
  }
  void add(double d) { add(std::bit_cast<std::uint64_t>(d)); }
  void add(const Vec3 &v) {
    add(v.x);
    add(v.y);
    add(v.z);
  }
  void add(const VertexSet &s) {
    add(static_cast<std::uint64_t>(s.size()));
    for (VertexId id : s) {
      add(static_cast<std::uint64_t>(id));
    }
  }
  std::uint64_t value() const { return hash_; }

private:
  std::uint64_t hash_ = 0xcbf29ce484222325ull;
};

json ids_json(const VertexSet &s) { return json(std::vector<VertexId>(s.begin(), s.end())); }

} // namespace

json to_json(const SessionEvent &e) {
  return {{"seq", e.seq},
          {"t_ms", e.t_ms},
          {"user", e.user ? json(*e.user) : json(nullptr)},
          {"dir", e.dir == Direction::In ? "in" : "out"},
          {"msg", e.msg}};
}

SessionEvent event_from_json(const json &j) {
  SessionEvent e;
  try {
    e.seq = j.at("seq").get<Seq>();
    e.t_ms = j.at("t_ms").get<TimeMs>();
    const json &user = j.at("user");
    if (!user.is_null()) {
      e.user = user.get<UserId>();
    }
    const auto dir = j.at("dir").get<std::string>();
    if (dir != "in" && dir != "out") {
      throw LoadError("event direction must be \"in\" or \"out\"");
    }
    e.dir = dir == "in" ? Direction::In : Direction::Out;
    e.msg = j.at("msg");
  } catch (const json::exception &ex) {
    throw LoadError(std::string("malformed event: ") + ex.what());
  }
  return e;
}

VertexSet UserState::selection() const {
  VertexSet s = pending;
  if (group) {
    s.insert(group->begin(), group->end());
  }
  return s;
}

std::string_view to_string(ColorState c) {
  switch (c) {
  case ColorState::Available:
    return "available";
  case ColorState::Mine:
    return "mine";
  case ColorState::Partner:
    return "partner";
  case ColorState::Shared:
    return "shared";
  }
  return "?";
}

json session_header(const WireframeModel &model, const WireframeModel &target,
                    const StrategyConfig &strategy) {
  return {{"type", "session_start"},
          {"model", to_json(model)},
          {"target", to_json(target)},
          {"strategy", to_string(strategy.kind)},
          {"tick_hz", kTickHz}};
}

Session::Session(WireframeModel model, WireframeModel target, StrategyConfig strategy,
                 TimeMs t_ms)
    : model_(std::move(model)), target_(std::move(target)), strategy_(strategy),
      last_t_ms_(t_ms) {
  model_.validate();
  target_.validate();
  if (model_.vertex_count() != target_.vertex_count()) {
    throw DomainError("model and target must share vertex ids");
  }
  log(Direction::Out, std::nullopt, session_header(model_, target_, strategy_), t_ms);
}

void Session::set_event_sink(std::function<void(const SessionEvent &)> sink) {
  sink_ = std::move(sink);
  if (sink_) {
    for (const SessionEvent &e : events_) {
      sink_(e);
    }
  }
}

TimeMs Session::clamp_time(TimeMs t_ms) {
  last_t_ms_ = std::max(last_t_ms_, t_ms);
  return last_t_ms_;
}

Seq Session::log(Direction dir, std::optional<UserId> user, json msg, TimeMs t_ms) {
  if (quiet_) {
    clamp_time(t_ms);
    return next_seq_++;
  }
  SessionEvent e{next_seq_++, clamp_time(t_ms), user, dir, std::move(msg)};
  if (sink_) {
    sink_(e);
  }
  const Seq seq = e.seq;
  if (retain_events_) {
    events_.push_back(std::move(e));
  }
  return seq;
}

void Session::send(StepResult &result, std::optional<UserId> to, json msg, TimeMs t_ms) {
  const std::optional<UserId> logged = to && *to >= 0 ? to : std::nullopt;
  log(Direction::Out, logged, msg, t_ms);
  result.outbound.push_back({to, std::move(msg)});
}

void Session::deny(StepResult &result, UserId user, DenyReason reason, Seq seq, TimeMs t_ms) {
  send(result, user, msg::deny(reason, seq), t_ms);
}

StepResult Session::join(std::string name, TimeMs t_ms) {
  StepResult result;
  const Seq seq = log(Direction::In, std::nullopt, msg::to_json(msg::Join{name}), t_ms);
  const auto slot = std::find_if(users_.begin(), users_.end(),
                                 [](const UserState &u) { return !u.joined; });
  if (slot == users_.end()) {
    send(result, kRequester, msg::deny(DenyReason::SessionFull, seq), t_ms);
    return result;
  }
  const auto id = static_cast<UserId>(slot - users_.begin());
  *slot = UserState{};
  slot->joined = true;
  slot->name = std::move(name);
  result.joined_as = id;
  send(result, id,
       {{"type", "welcome"},
        {"user_id", id},
        {"model", to_json(model_)},
        {"target", to_json(target_)},
        {"strategy", to_string(strategy_.kind)}},
       t_ms);
  return result;
}

StepResult Session::handle_line(UserId user, std::string_view line, TimeMs t_ms) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    StepResult result;
    log(Direction::In, user, json(std::string(line)), t_ms);
    send(result, user, msg::error("message is not valid JSON"), t_ms);
    result.drop_connection = true;
    return result;
  }
  return handle_json(user, j, t_ms);
}

StepResult Session::handle_json(UserId user, const json &j, TimeMs t_ms) {
  msg::Inbound parsed;
  try {
    parsed = msg::parse(j);
    if (std::holds_alternative<msg::Join>(parsed)) {
      throw ProtocolError("already joined");
    }
  } catch (const ProtocolError &e) {
    StepResult result;
    log(Direction::In, user, j, t_ms);
    send(result, user, msg::error(e.what()), t_ms);
    result.drop_connection = true;
    return result;
  }
  return handle_message(user, parsed, t_ms);
}

StepResult Session::handle_message(UserId user, const msg::Inbound &m, TimeMs t_ms) {
  if (user < 0 || user >= kUserCount || !users_[user].joined) {
    throw ProtocolError("message from a user that has not joined");
  }
  if (std::holds_alternative<msg::Join>(m)) {
    throw ProtocolError("already joined");
  }
  if (std::holds_alternative<msg::Disconnect>(m)) {
    return disconnect(user, t_ms);
  }
  StepResult result;
  const Seq seq = log(Direction::In, user, msg::to_json(m), t_ms);
  const TimeMs t = last_t_ms_;
  std::visit(
      [&](const auto &message) {
        using T = std::decay_t<decltype(message)>;
        if constexpr (!std::is_same_v<T, msg::Join> && !std::is_same_v<T, msg::Disconnect>) {
          on(user, seq, message, result, t);
        }
      },
      m);
  return result;
}

StepResult Session::disconnect(UserId user, TimeMs t_ms) {
  StepResult result;
  if (user < 0 || user >= kUserCount || !users_[user].joined) {
    return result;
  }
  log(Direction::In, user, msg::to_json(msg::Disconnect{}), t_ms);
  release_grab(user);
  users_[user] = UserState{};
  rebuild_locks();
  const UserId other = 1 - user;
  if (users_[other].joined) {
    send(result, other, msg::peer_left(), t_ms);
  }
  return result;
}

void Session::on(UserId u, Seq seq, const msg::Select &m, StepResult &r, TimeMs t) {
  if (!model_.has_vertex(m.vertex)) {
    deny(r, u, DenyReason::BadVertex, seq, t);
    return;
  }
  if (strategy_.locks_selections()) {
    const Permission p = check_olr_select(u, m.vertex, locks_, model_.vertex_count());
    if (!p.allowed) {
      deny(r, u, p.reason, seq, t);
      return;
    }
  }
  users_[u].pending.insert(m.vertex);
  rebuild_locks();
}

void Session::on(UserId u, Seq seq, const msg::Deselect &m, StepResult &r, TimeMs t) {
  if (!model_.has_vertex(m.vertex)) {
    deny(r, u, DenyReason::BadVertex, seq, t);
    return;
  }
  users_[u].pending.erase(m.vertex);
  rebuild_locks();
}

void Session::on(UserId u, Seq seq, const msg::ConfirmGroup &, StepResult &r, TimeMs t) {
  if (users_[u].pending.empty()) {
    deny(r, u, DenyReason::NoGroup, seq, t);
    return;
  }
  release_grab(u);
  users_[u].group = users_[u].pending;
  rebuild_locks();
}

void Session::on(UserId u, Seq seq, const msg::CancelGroup &, StepResult &r, TimeMs t) {
  if (!users_[u].group && users_[u].pending.empty()) {
    deny(r, u, DenyReason::NoGroup, seq, t);
    return;
  }
  clear_group(u);
}

void Session::on(UserId u, Seq, const msg::SetOp &m, StepResult &, TimeMs) {
  // An active grab keeps the operation it started with.
  users_[u].op = m.op;
}

void Session::on(UserId u, Seq seq, const msg::Grab &m, StepResult &r, TimeMs t) {
  UserState &user = users_[u];
  if (!user.group) {
    deny(r, u, DenyReason::NoGroup, seq, t);
    return;
  }
  if (!model_.has_vertex(m.vertex) || !user.group->contains(m.vertex)) {
    deny(r, u, DenyReason::BadVertex, seq, t);
    return;
  }
  std::vector<Vec3> members;
  members.reserve(user.group->size());
  for (VertexId id : *user.group) {
    members.push_back(model_.positions[id]);
  }
  const Vec3 pivot = centroid(members);
  const Vec3 &vertex_pos = model_.positions[m.vertex];
  if (user.op != OperationKind::Translate &&
      (distance(vertex_pos, pivot) <= kPivotEpsilon || distance(m.handle, pivot) <= kPivotEpsilon)) {
    deny(r, u, DenyReason::DegeneratePivot, seq, t);
    return;
  }
  if (strategy_.restricts_actions()) {
    ActiveOps ops = active_ops();
    ops[u].reset();
    const Permission p = check_alr_grab(u, user.op, group_partition_for(u), ops);
    if (!p.allowed) {
      deny(r, u, p.reason, seq, t);
      return;
    }
  }
  release_grab(u);
  user.grab = GrabState{u, m.vertex, user.op, pivot, m.handle, m.handle, seq, vertex_pos, 1.0};
}

void Session::on(UserId u, Seq, const msg::Move &m, StepResult &, TimeMs) {
  if (users_[u].grab) {
    users_[u].grab->latest_sample = m.handle;
  }
}

void Session::on(UserId u, Seq, const msg::Release &, StepResult &, TimeMs) { release_grab(u); }

void Session::on(UserId, Seq, const msg::MatchCheck &, StepResult &r, TimeMs t) {
  const MatchResult match = match_check(model_, target_);
  send(r, std::nullopt,
       {{"type", "match_result"}, {"matched", match.matched}, {"max_error_m", match.max_error}}, t);
}

void Session::release_grab(UserId u) {
  UserState &user = users_[u];
  if (!user.grab) {
    return;
  }
  const GrabState &g = *user.grab;
  const UserState &partner = users_[1 - u];
  const bool shared = partner.group && partner.group->contains(g.vertex);
  if (g.op == OperationKind::Scale && !shared) {
    const PositionMap snapped = snap_back({{g.vertex, model_.positions[g.vertex]}}, g.vertex,
                                          g.vertex_start, g.pivot, g.cumulative_scale);
    model_.positions[g.vertex] = snapped.at(g.vertex);
  }
  user.grab.reset();
}

void Session::clear_group(UserId u) {
  release_grab(u);
  users_[u].group.reset();
  users_[u].pending.clear();
  rebuild_locks();
}

void Session::rebuild_locks() {
  locks_.clear();
  if (!strategy_.locks_selections()) {
    return;
  }
  for (UserId u = 0; u < kUserCount; ++u) {
    for (VertexId id : users_[u].selection()) {
      locks_.emplace(id, u);
    }
  }
}

OverlapPartition Session::group_partition() const { return group_partition_for(0); }

OverlapPartition Session::group_partition_for(UserId u) const {
  static const VertexSet kEmpty;
  const auto &mine = users_[u].group;
  const auto &theirs = users_[1 - u].group;
  return partition(mine ? *mine : kEmpty, theirs ? *theirs : kEmpty);
}

ActiveOps Session::active_ops() const {
  ActiveOps ops;
  for (UserId u = 0; u < kUserCount; ++u) {
    if (users_[u].grab) {
      ops[u] = users_[u].grab->op;
    }
  }
  return ops;
}

StepResult Session::advance_tick(TimeMs t_ms) {
  std::vector<TickInput> inputs;
  for (UserId u = 0; u < kUserCount; ++u) {
    if (!users_[u].grab) {
      continue;
    }
    GrabState &g = *users_[u].grab;
    TickInput input{u, g.op, g.seq, g.pivot, TransformDelta::identity(),
                    std::vector<VertexId>(users_[u].group->begin(), users_[u].group->end())};
    switch (g.op) {
    case OperationKind::Translate:
      input.delta = TransformDelta::translate(translation_delta(g.prev_sample, g.latest_sample));
      g.prev_sample = g.latest_sample;
      break;
    case OperationKind::Rotate:
      // Samples inside the pivot ball carry no direction; hold until the handle leaves it.
      if (distance(g.latest_sample, g.pivot) > kPivotEpsilon) {
        input.delta =
            TransformDelta::rotate(rotation_delta(g.prev_sample, g.latest_sample, g.pivot));
        g.prev_sample = g.latest_sample;
      }
      break;
    case OperationKind::Scale:
      if (distance(g.latest_sample, g.pivot) > kPivotEpsilon) {
        const double s = scale_delta(g.prev_sample, g.latest_sample, g.pivot);
        input.delta = TransformDelta::uniform_scale(s);
        g.cumulative_scale *= s;
        g.prev_sample = g.latest_sample;
      }
      break;
    }
    inputs.push_back(std::move(input));
  }
  if (!inputs.empty()) {
    const OverlapPartition groups = group_partition();
    model_.positions = model_.vertex_count() >= kParallelResolveThreshold
                           ? resolve_tick_parallel(model_.positions, inputs, groups, strategy_)
                           : resolve_tick(model_.positions, inputs, groups, strategy_);
  }
  ++tick_;
  StepResult result;
  if (quiet_) {
    log(Direction::Out, std::nullopt, json(), t_ms);
  } else {
    send(result, std::nullopt, snapshot(), t_ms);
  }
  return result;
}

json Session::snapshot() const {
  json positions = json::object();
  for (std::size_t i = 0; i < model_.positions.size(); ++i) {
    positions[std::to_string(i)] = to_json(model_.positions[i]);
  }
  json selections = json::object();
  json groups = json::object();
  json ops = json::object();
  for (UserId u = 0; u < kUserCount; ++u) {
    const std::string key = std::to_string(u);
    selections[key] = ids_json(users_[u].selection());
    groups[key] = users_[u].group ? ids_json(*users_[u].group) : json(nullptr);
    ops[key] = users_[u].grab ? json(to_string(users_[u].grab->op)) : json(nullptr);
  }
  return {{"type", "state"},         {"tick", tick_},     {"positions", std::move(positions)},
          {"selections", selections}, {"groups", groups}, {"active_ops", ops}};
}

std::map<VertexId, ColorState> Session::color_state(UserId viewer) const {
  const VertexSet mine = users_.at(viewer).selection();
  const VertexSet theirs = users_.at(1 - viewer).selection();
  std::map<VertexId, ColorState> colors;
  for (std::size_t i = 0; i < model_.vertex_count(); ++i) {
    const auto id = static_cast<VertexId>(i);
    const bool a = mine.contains(id);
    const bool b = theirs.contains(id);
    colors[id] = a && b ? ColorState::Shared
                        : (a ? ColorState::Mine : (b ? ColorState::Partner : ColorState::Available));
  }
  return colors;
}

std::uint64_t Session::state_hash() const {
  Fnv1a h;
  h.add(static_cast<std::uint64_t>(tick_));
  for (const Vec3 &p : model_.positions) {
    h.add(p);
  }
  for (const UserState &u : users_) {
    h.add(static_cast<std::uint64_t>(u.joined));
    h.add(u.pending);
    h.add(static_cast<std::uint64_t>(u.group.has_value()));
    if (u.group) {
      h.add(*u.group);
    }
    h.add(static_cast<std::uint64_t>(u.op));
    h.add(static_cast<std::uint64_t>(u.grab.has_value()));
    if (u.grab) {
      const GrabState &g = *u.grab;
      h.add(static_cast<std::uint64_t>(g.vertex));
      h.add(static_cast<std::uint64_t>(g.op));
      h.add(g.pivot);
      h.add(g.prev_sample);
      h.add(g.latest_sample);
      h.add(g.seq);
      h.add(g.vertex_start);
      h.add(g.cumulative_scale);
    }
  }
  return h.value();
}

void Session::check_invariants() const {
  for (UserId u = 0; u < kUserCount; ++u) {
    const UserState &user = users_[u];
    if (user.grab && (!user.group || !user.group->contains(user.grab->vertex))) {
      throw std::logic_error("grab outside the owner's group");
    }
  }
  if (!strategy_.locks_selections() && !locks_.empty()) {
    throw std::logic_error("lock table populated outside object-level restriction");
  }
  if (strategy_.locks_selections()) {
    const OverlapPartition p = partition(users_[0].selection(), users_[1].selection());
    if (!p.joint.empty()) {
      throw std::logic_error("overlapping selections under object-level restriction");
    }
  }
  if (strategy_.restricts_actions() && users_[0].grab && users_[1].grab &&
      users_[0].grab->op == users_[1].grab->op && !group_partition().joint.empty()) {
    throw std::logic_error("concurrent same-operation grabs on intersecting groups");
  }
}

} // namespace coedit
