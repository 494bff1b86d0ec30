// Brute-force re-execution of a scenario, written against the protocol rules
// rather than the Session class. Only message parsing and the quaternion
// primitives are shared with the engine.

#include <algorithm>
#include <array>
#include <optional>
#include <set>
#include <variant>

#include "coedit/harness.hpp"

namespace coedit {

namespace {

using nlohmann::json;

struct OracleGrab {
  VertexId vertex;
  OperationKind op;
  Vec3 pivot;
  Vec3 last_used;
  Vec3 latest;
  std::size_t order;
  Vec3 start;
  double scale_product;
};

struct OracleUser {
  bool present = false;
  std::set<VertexId> pending;
  bool has_group = false;
  std::set<VertexId> group;
  OperationKind op = OperationKind::Translate;
  std::optional<OracleGrab> grab;
};

class Oracle {
public:
  Oracle(const Scenario &s) : points_(s.model.positions), strategy_(s.strategy.kind) {
    users_[0].present = true;
    users_[1].present = true;
  }

  void deliver(const ScenarioAction &a) {
    while (1000 * (ticks_ + 1) <= kTickHz * a.t_ms) {
      tick();
    }
    if (!users_[a.user].present) {
      if (a.msg.is_object() && a.msg.contains("type") && a.msg["type"] == "join") {
        users_[a.user] = OracleUser{};
        users_[a.user].present = true;
      }
      return;
    }
    const json *msg = &a.msg;
    json parsed_line;
    if (msg->is_string()) {
      parsed_line = json::parse(msg->get<std::string>(), nullptr, false);
      if (parsed_line.is_discarded()) {
        leave(a.user);
        return;
      }
      msg = &parsed_line;
    }
    ++order_;
    msg::Inbound m;
    try {
      m = msg::parse(*msg);
    } catch (const ProtocolError &) {
      leave(a.user);
      return;
    }
    if (std::holds_alternative<msg::Join>(m) || std::holds_alternative<msg::Disconnect>(m)) {
      leave(a.user);
      return;
    }
    apply(a.user, m);
  }

  void tick() {
    std::array<std::map<VertexId, Vec3>, 2> fields;
    for (int u = 0; u < 2; ++u) {
      if (!users_[u].grab) {
        continue;
      }
      OracleGrab &g = *users_[u].grab;
      for (VertexId id : users_[u].group) {
        fields[u][id] = Vec3{};
      }
      if (g.op == OperationKind::Translate) {
        const Vec3 t = g.latest - g.last_used;
        for (VertexId id : users_[u].group) {
          fields[u][id] = t;
        }
        g.last_used = g.latest;
        continue;
      }
      if (distance(g.latest, g.pivot) <= kPivotEpsilon) {
        continue;
      }
      const Vec3 r0 = g.last_used - g.pivot;
      const Vec3 r1 = g.latest - g.pivot;
      if (g.op == OperationKind::Rotate) {
        const Quat q = minimal_arc_rotation(r0 / norm(r0), r1 / norm(r1));
        for (VertexId id : users_[u].group) {
          const Vec3 p = points_[id];
          fields[u][id] = (g.pivot + rotate(q, p - g.pivot)) - p;
        }
      } else {
        double s = norm(r1) / norm(r0);
        s = s < kMinScale ? kMinScale : (s > kMaxScale ? kMaxScale : s);
        g.scale_product *= s;
        for (VertexId id : users_[u].group) {
          const Vec3 p = points_[id];
          fields[u][id] = (g.pivot + s * (p - g.pivot)) - p;
        }
      }
      g.last_used = g.latest;
    }
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const auto id = static_cast<VertexId>(i);
      const bool in0 = fields[0].contains(id);
      const bool in1 = fields[1].contains(id);
      if (in0 && in1) {
        points_[i] = points_[i] + both(fields[0][id], fields[1][id]);
      } else if (in0) {
        points_[i] = points_[i] + fields[0][id];
      } else if (in1) {
        points_[i] = points_[i] + fields[1][id];
      }
    }
    ++ticks_;
  }

  const std::vector<Vec3> &points() const { return points_; }

private:
  Vec3 both(const Vec3 &d0, const Vec3 &d1) const {
    const OracleGrab &g0 = *users_[0].grab;
    const OracleGrab &g1 = *users_[1].grab;
    if (g0.op != g1.op || strategy_ == StrategyKind::Additive) {
      return d0 + d1;
    }
    if (strategy_ == StrategyKind::Averaging) {
      return (d0 + d1) * 0.5;
    }
    if (strategy_ == StrategyKind::SecondUserPriority) {
      return g1.order > g0.order ? d1 : d0;
    }
    if (strategy_ == StrategyKind::Intersection) {
      Vec3 r;
      for (int k = 0; k < 3; ++k) {
        const double a = d0[k];
        const double b = d1[k];
        if (std::abs(a) < kIntersectionEpsilon) {
          r[k] = std::abs(b) < kIntersectionEpsilon ? 0.0 : b;
        } else if (std::abs(b) < kIntersectionEpsilon) {
          r[k] = a;
        } else if (a * b > 0.0) {
          r[k] = std::abs(b) < std::abs(a) ? b : a;
        }
      }
      return r;
    }
    throw std::logic_error("oracle: restricted strategy produced a shared same-operation vertex");
  }

  bool valid(VertexId v) const { return v >= 0 && static_cast<std::size_t>(v) < points_.size(); }

  bool groups_intersect() const {
    if (!users_[0].has_group || !users_[1].has_group) {
      return false;
    }
    for (VertexId v : users_[0].group) {
      if (users_[1].group.contains(v)) {
        return true;
      }
    }
    return false;
  }

  void drop_grab(int u) {
    OracleUser &user = users_[u];
    if (!user.grab) {
      return;
    }
    const OracleGrab &g = *user.grab;
    const OracleUser &other = users_[1 - u];
    if (g.op == OperationKind::Scale && !(other.has_group && other.group.contains(g.vertex))) {
      points_[g.vertex] = g.pivot + g.scale_product * (g.start - g.pivot);
    }
    user.grab.reset();
  }

  void leave(int u) {
    drop_grab(u);
    users_[u] = OracleUser{};
  }

  void apply(int u, const msg::Inbound &m) {
    OracleUser &user = users_[u];
    const OracleUser &other = users_[1 - u];
    if (const auto *sel = std::get_if<msg::Select>(&m)) {
      if (!valid(sel->vertex)) {
        return;
      }
      if (strategy_ == StrategyKind::ObjectLevelRestriction &&
          (other.pending.contains(sel->vertex) ||
           (other.has_group && other.group.contains(sel->vertex)))) {
        return;
      }
      user.pending.insert(sel->vertex);
    } else if (const auto *des = std::get_if<msg::Deselect>(&m)) {
      user.pending.erase(des->vertex);
    } else if (std::holds_alternative<msg::ConfirmGroup>(m)) {
      if (!user.pending.empty()) {
        drop_grab(u);
        user.group = user.pending;
        user.has_group = true;
      }
    } else if (std::holds_alternative<msg::CancelGroup>(m)) {
      drop_grab(u);
      user.pending.clear();
      user.group.clear();
      user.has_group = false;
    } else if (const auto *op = std::get_if<msg::SetOp>(&m)) {
      user.op = op->op;
    } else if (const auto *grab = std::get_if<msg::Grab>(&m)) {
      if (!user.has_group || !user.group.contains(grab->vertex)) {
        return;
      }
      Vec3 pivot;
      for (VertexId v : user.group) {
        pivot += points_[v];
      }
      pivot = pivot / static_cast<double>(user.group.size());
      if (user.op != OperationKind::Translate &&
          (distance(points_[grab->vertex], pivot) <= kPivotEpsilon ||
           distance(grab->handle, pivot) <= kPivotEpsilon)) {
        return;
      }
      if (strategy_ == StrategyKind::ActionLevelRestriction && other.grab &&
          other.grab->op == user.op && groups_intersect()) {
        return;
      }
      drop_grab(u);
      user.grab = OracleGrab{grab->vertex, user.op, pivot,  grab->handle, grab->handle,
                             order_,       points_[grab->vertex], 1.0};
    } else if (const auto *move = std::get_if<msg::Move>(&m)) {
      if (user.grab) {
        user.grab->latest = move->handle;
      }
    } else if (std::holds_alternative<msg::Release>(m)) {
      drop_grab(u);
    }
  }

  std::vector<Vec3> points_;
  StrategyKind strategy_;
  std::array<OracleUser, 2> users_;
  std::int64_t ticks_ = 0;
  std::size_t order_ = 0;
};

} // namespace

WireframeModel oracle_resolve(const Scenario &scenario) {
  validate(scenario);
  Oracle oracle(scenario);
  for (const ScenarioAction &a : scenario.actions) {
    oracle.deliver(a);
  }
  oracle.tick();
  WireframeModel out = scenario.model;
  out.positions = oracle.points();
  return out;
}

} // namespace coedit
