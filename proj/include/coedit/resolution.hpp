#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "coedit/geometry.hpp"

namespace coedit {

using UserId = int;
using Seq = std::uint64_t;
using VertexSet = std::set<VertexId>;

inline constexpr int kUserCount = 2;

/// Raised for messages that reference things the protocol does not know about.
class ProtocolError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class StrategyKind {
  ObjectLevelRestriction,
  ActionLevelRestriction,
  Additive,
  Averaging,
  Intersection,
  SecondUserPriority,
};

inline constexpr std::array kAllStrategies{
    StrategyKind::ObjectLevelRestriction, StrategyKind::ActionLevelRestriction,
    StrategyKind::Additive,               StrategyKind::Averaging,
    StrategyKind::Intersection,           StrategyKind::SecondUserPriority,
};

inline constexpr std::array kReactiveStrategies{
    StrategyKind::Additive,
    StrategyKind::Averaging,
    StrategyKind::Intersection,
    StrategyKind::SecondUserPriority,
};

struct StrategyConfig {
  StrategyKind kind = StrategyKind::Averaging;

  bool is_reactive() const {
    return kind != StrategyKind::ObjectLevelRestriction &&
           kind != StrategyKind::ActionLevelRestriction;
  }
  bool locks_selections() const { return kind == StrategyKind::ObjectLevelRestriction; }
  bool restricts_actions() const { return kind == StrategyKind::ActionLevelRestriction; }
};

/// Wire names: olr, alr, additive, averaging, intersection, second_user.
std::string_view to_string(StrategyKind kind);
/// Throws ProtocolError on an unknown name.
StrategyKind parse_strategy(std::string_view name);

enum class OperationKind { Translate, Rotate, Scale };

std::string_view to_string(OperationKind op);
std::optional<OperationKind> parse_operation(std::string_view name);

struct OverlapPartition {
  VertexSet joint;
  VertexSet disjoint_a;
  VertexSet disjoint_b;
};

OverlapPartition partition(const VertexSet &a, const VertexSet &b);

enum class DenyReason { OlrLocked, AlrSameOp, DegeneratePivot, NoGroup, BadVertex, SessionFull };

std::string_view to_string(DenyReason reason);

struct Permission {
  bool allowed = true;
  DenyReason reason = DenyReason::NoGroup;

  static Permission allow() { return {}; }
  static Permission deny(DenyReason r) { return {false, r}; }
};

/// vertex -> user holding it. Populated only under object-level restriction.
using LockTable = std::map<VertexId, UserId>;

/// Object-level restriction: a vertex held by the other user cannot be selected.
/// Throws ProtocolError for ids outside [0, vertex_count).
Permission check_olr_select(UserId user, VertexId vertex, const LockTable &locks,
                            std::size_t vertex_count);

/// Operation currently being performed by each user, if any.
using ActiveOps = std::array<std::optional<OperationKind>, kUserCount>;

/// Action-level restriction. `groups` partitions this user's group (a) against
/// the other user's group (b). The earlier grab keeps its operation type.
Permission check_alr_grab(UserId user, OperationKind op, const OverlapPartition &groups,
                          const ActiveOps &active_ops);

/// One user's grab as seen by a single tick.
struct TickInput {
  UserId user = 0;
  OperationKind op = OperationKind::Translate;
  /// Server sequence number of the grab; later grabs win under second-user priority.
  Seq seq = 0;
  Vec3 pivot;
  TransformDelta delta;
  /// Sorted, unique vertex ids of the grabbing user's confirmed group.
  std::vector<VertexId> group;
};

using DisplacementField = std::map<VertexId, Vec3>;

Vec3 induced_displacement(const Vec3 &p, const TickInput &input);
DisplacementField induced_displacements(const TickInput &input, std::span<const Vec3> positions);

inline constexpr double kIntersectionEpsilon = 1e-7;

Vec3 resolve_additive(const Vec3 &d1, const Vec3 &d2);
Vec3 resolve_average(const Vec3 &d1, const Vec3 &d2);
/// Per axis: components under kIntersectionEpsilon abstain; agreeing signs keep
/// the smaller magnitude; opposing signs cancel.
Vec3 resolve_intersection(const Vec3 &d1, const Vec3 &d2);
/// Last writer wins: the displacement of the grab with the larger sequence number.
Vec3 resolve_second_user(const Vec3 &d1, Seq seq1, const Vec3 &d2, Seq seq2);

/// Combined displacement of a vertex both grabs cover.
Vec3 combine_joint(const StrategyConfig &strategy, const TickInput &a, const Vec3 &da,
                   const TickInput &b, const Vec3 &db);

/// Serial reference. `groups` partitions the two users' confirmed groups.
/// Returns new positions for every vertex; vertices outside all active grabs are copied.
/// Throws std::logic_error when object-level restriction is active and groups overlap,
/// or when more than one grab per user is supplied.
std::vector<Vec3> resolve_tick(std::span<const Vec3> positions, std::span<const TickInput> inputs,
                               const OverlapPartition &groups, const StrategyConfig &strategy);

/// OpenMP variant of resolve_tick; bitwise identical output.
std::vector<Vec3> resolve_tick_parallel(std::span<const Vec3> positions,
                                        std::span<const TickInput> inputs,
                                        const OverlapPartition &groups,
                                        const StrategyConfig &strategy);

/// Vertex count at which the session switches to the parallel kernel.
inline constexpr std::size_t kParallelResolveThreshold = 4096;

} // namespace coedit
