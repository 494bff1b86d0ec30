#include "coedit/resolution.hpp"

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace coedit {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
  case StrategyKind::ObjectLevelRestriction:
    return "olr";
  case StrategyKind::ActionLevelRestriction:
    return "alr";
  case StrategyKind::Additive:
    return "additive";
  case StrategyKind::Averaging:
    return "averaging";
  case StrategyKind::Intersection:
    return "intersection";
  case StrategyKind::SecondUserPriority:
    return "second_user";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view name) {
  for (StrategyKind k : kAllStrategies) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw ProtocolError("unknown strategy '" + std::string(name) + "'");
}

std::string_view to_string(OperationKind op) {
  switch (op) {
  case OperationKind::Translate:
    return "translate";
  case OperationKind::Rotate:
    return "rotate";
  case OperationKind::Scale:
    return "scale";
  }
  return "?";
}

std::optional<OperationKind> parse_operation(std::string_view name) {
  for (OperationKind op : {OperationKind::Translate, OperationKind::Rotate, OperationKind::Scale}) {
    if (to_string(op) == name) {
      return op;
    }
  }
  return std::nullopt;
}

std::string_view to_string(DenyReason reason) {
  switch (reason) {
  case DenyReason::OlrLocked:
    return "olr_locked";
  case DenyReason::AlrSameOp:
    return "alr_same_op";
  case DenyReason::DegeneratePivot:
    return "degenerate_pivot";
  case DenyReason::NoGroup:
    return "no_group";
  case DenyReason::BadVertex:
    return "bad_vertex";
  case DenyReason::SessionFull:
    return "session_full";
  }
  return "?";
}

OverlapPartition partition(const VertexSet &a, const VertexSet &b) {
  OverlapPartition out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::inserter(out.joint, out.joint.end()));
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::inserter(out.disjoint_a, out.disjoint_a.end()));
  std::set_difference(b.begin(), b.end(), a.begin(), a.end(),
                      std::inserter(out.disjoint_b, out.disjoint_b.end()));
  return out;
}

Permission check_olr_select(UserId user, VertexId vertex, const LockTable &locks,
                            std::size_t vertex_count) {
  if (vertex < 0 || static_cast<std::size_t>(vertex) >= vertex_count) {
    throw ProtocolError("unknown vertex " + std::to_string(vertex));
  }
  const auto it = locks.find(vertex);
  if (it != locks.end() && it->second != user) {
    return Permission::deny(DenyReason::OlrLocked);
  }
  return Permission::allow();
}

Permission check_alr_grab(UserId user, OperationKind op, const OverlapPartition &groups,
                          const ActiveOps &active_ops) {
  const UserId other = 1 - user;
  if (!groups.joint.empty() && active_ops[other] == op) {
    return Permission::deny(DenyReason::AlrSameOp);
  }
  return Permission::allow();
}

Vec3 induced_displacement(const Vec3 &p, const TickInput &input) {
  return apply_delta(p, input.pivot, input.delta) - p;
}

DisplacementField induced_displacements(const TickInput &input, std::span<const Vec3> positions) {
  DisplacementField field;
  for (VertexId id : input.group) {
    field.emplace(id, induced_displacement(positions[static_cast<std::size_t>(id)], input));
  }
  return field;
}

Vec3 resolve_additive(const Vec3 &d1, const Vec3 &d2) { return d1 + d2; }

Vec3 resolve_average(const Vec3 &d1, const Vec3 &d2) { return (d1 + d2) * 0.5; }

Vec3 resolve_intersection(const Vec3 &d1, const Vec3 &d2) {
  Vec3 out;
  for (int axis = 0; axis < 3; ++axis) {
    const double a = d1[axis];
    const double b = d2[axis];
    const bool a_silent = std::abs(a) < kIntersectionEpsilon;
    const bool b_silent = std::abs(b) < kIntersectionEpsilon;
    if (a_silent && b_silent) {
      out[axis] = 0.0;
    } else if (a_silent) {
      out[axis] = b;
    } else if (b_silent) {
      out[axis] = a;
    } else if ((a > 0.0) == (b > 0.0)) {
      out[axis] = std::abs(a) <= std::abs(b) ? a : b;
    } else {
      out[axis] = 0.0;
    }
  }
  return out;
}

Vec3 resolve_second_user(const Vec3 &d1, Seq seq1, const Vec3 &d2, Seq seq2) {
  return seq2 > seq1 ? d2 : d1;
}

Vec3 combine_joint(const StrategyConfig &strategy, const TickInput &a, const Vec3 &da,
                   const TickInput &b, const Vec3 &db) {
  if (a.op != b.op) {
    // Different operations both apply.
    return resolve_additive(da, db);
  }
  switch (strategy.kind) {
  case StrategyKind::Additive:
    return resolve_additive(da, db);
  case StrategyKind::Averaging:
    return resolve_average(da, db);
  case StrategyKind::Intersection:
    return resolve_intersection(da, db);
  case StrategyKind::SecondUserPriority:
    return resolve_second_user(da, a.seq, db, b.seq);
  case StrategyKind::ObjectLevelRestriction:
  case StrategyKind::ActionLevelRestriction:
    break;
  }
  throw std::logic_error(std::string("same-operation grabs share vertices under ") +
                         std::string(to_string(strategy.kind)));
}

namespace {

struct PreparedTick {
  // Bit k set: inputs[k] covers the vertex.
  std::vector<std::uint8_t> coverage;
};

PreparedTick prepare(std::span<const Vec3> positions, std::span<const TickInput> inputs,
                     const OverlapPartition &groups, const StrategyConfig &strategy) {
  if (inputs.size() > kUserCount ||
      (inputs.size() == kUserCount && inputs[0].user == inputs[1].user)) {
    throw std::logic_error("at most one grab per user may be resolved per tick");
  }
  if (strategy.locks_selections() && !groups.joint.empty()) {
    throw std::logic_error("overlapping groups under object-level restriction");
  }
  PreparedTick prepared;
  prepared.coverage.assign(positions.size(), 0);
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    for (VertexId id : inputs[k].group) {
      if (id < 0 || static_cast<std::size_t>(id) >= positions.size()) {
        throw std::logic_error("grab group references vertex " + std::to_string(id));
      }
      prepared.coverage[static_cast<std::size_t>(id)] |= static_cast<std::uint8_t>(1u << k);
    }
  }
  return prepared;
}

inline Vec3 resolve_vertex(const Vec3 &p, std::uint8_t coverage, std::span<const TickInput> inputs,
                           const StrategyConfig &strategy) {
  switch (coverage) {
  case 0:
    return p;
  case 1:
    return p + induced_displacement(p, inputs[0]);
  case 2:
    return p + induced_displacement(p, inputs[1]);
  default:
    return p + combine_joint(strategy, inputs[0], induced_displacement(p, inputs[0]), inputs[1],
                             induced_displacement(p, inputs[1]));
  }
}

} // namespace

std::vector<Vec3> resolve_tick(std::span<const Vec3> positions, std::span<const TickInput> inputs,
                               const OverlapPartition &groups, const StrategyConfig &strategy) {
  const PreparedTick prepared = prepare(positions, inputs, groups, strategy);
  std::vector<Vec3> out(positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) {
    out[i] = resolve_vertex(positions[i], prepared.coverage[i], inputs, strategy);
  }
  return out;
}

std::vector<Vec3> resolve_tick_parallel(std::span<const Vec3> positions,
                                        std::span<const TickInput> inputs,
                                        const OverlapPartition &groups,
                                        const StrategyConfig &strategy) {
  const PreparedTick prepared = prepare(positions, inputs, groups, strategy);
  std::vector<Vec3> out(positions.size());
  const auto n = static_cast<std::int64_t>(positions.size());
  // Exceptions must not escape the parallel region; collect and rethrow.
  bool invariant_broken = false;
#pragma omp parallel for schedule(static) reduction(|| : invariant_broken)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      out[i] = resolve_vertex(positions[i], prepared.coverage[i], inputs, strategy);
    } catch (const std::logic_error &) {
      invariant_broken = true;
    }
  }
  if (invariant_broken) {
    throw std::logic_error(std::string("same-operation grabs share vertices under ") +
                           std::string(to_string(strategy.kind)));
  }
  return out;
}

} // namespace coedit
