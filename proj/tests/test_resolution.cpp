#include <doctest.h>

#include <cmath>
#include <numbers>

#include "coedit/resolution.hpp"
#include "coedit/rng.hpp"
#include "coedit/scenariogen.hpp"

using namespace coedit;

namespace {

const OperationKind T = OperationKind::Translate;
const OperationKind R = OperationKind::Rotate;
const OperationKind S = OperationKind::Scale;

void check_near(const Vec3 &a, const Vec3 &b, double tol = 1e-12) {
  INFO(to_string(a), " vs ", to_string(b));
  CHECK(std::abs(a.x - b.x) <= tol);
  CHECK(std::abs(a.y - b.y) <= tol);
  CHECK(std::abs(a.z - b.z) <= tol);
}

TickInput translate_input(UserId user, Seq seq, Vec3 t, std::vector<VertexId> group) {
  TickInput in;
  in.user = user;
  in.op = T;
  in.seq = seq;
  in.delta = TransformDelta::translate(t);
  in.group = std::move(group);
  return in;
}

Vec3 random_vec(Rng &rng, double lo, double hi) {
  return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

} // namespace

TEST_CASE("partition") {
  const OverlapPartition p = partition({0, 1, 2, 3}, {2, 3, 4, 5});
  CHECK(p.joint == VertexSet{2, 3});
  CHECK(p.disjoint_a == VertexSet{0, 1});
  CHECK(p.disjoint_b == VertexSet{4, 5});

  const OverlapPartition apart = partition({0, 1}, {5, 6});
  CHECK(apart.joint.empty());
  CHECK(apart.disjoint_a == VertexSet{0, 1});

  const OverlapPartition same = partition({1, 4, 7}, {1, 4, 7});
  CHECK(same.joint == VertexSet{1, 4, 7});
  CHECK(same.disjoint_a.empty());
  CHECK(same.disjoint_b.empty());
}

TEST_CASE("object-level restriction") {
  const LockTable locks{{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const Permission p = check_olr_select(1, 2, locks, 8);
  CHECK_FALSE(p.allowed);
  CHECK(p.reason == DenyReason::OlrLocked);
  CHECK(check_olr_select(1, 4, locks, 8).allowed);
  CHECK(check_olr_select(0, 0, locks, 8).allowed);
  CHECK_THROWS_AS(check_olr_select(1, 8, locks, 8), ProtocolError);
  CHECK_THROWS_AS(check_olr_select(1, -1, locks, 8), ProtocolError);
}

TEST_CASE("action-level restriction") {
  const OverlapPartition overlap = partition({2, 3, 4, 5}, {0, 1, 2, 3});
  const ActiveOps rotating{R, std::nullopt};
  const Permission p = check_alr_grab(1, R, overlap, rotating);
  CHECK_FALSE(p.allowed);
  CHECK(p.reason == DenyReason::AlrSameOp);
  CHECK(check_alr_grab(1, S, overlap, rotating).allowed);
  CHECK(check_alr_grab(1, T, overlap, rotating).allowed);
  CHECK(check_alr_grab(1, R, partition({4, 5}, {0, 1}), rotating).allowed);
  CHECK(check_alr_grab(1, R, overlap, ActiveOps{}).allowed);
  CHECK_FALSE(check_alr_grab(0, S, overlap, ActiveOps{std::nullopt, S}).allowed);
}

TEST_CASE("induced displacements") {
  const std::vector<Vec3> pos{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  SUBCASE("translation moves every group vertex") {
    const TickInput in = translate_input(0, 1, {0.1, 0.2, 0.3}, {0, 2});
    const DisplacementField f = induced_displacements(in, pos);
    CHECK(f.size() == 2);
    CHECK(f.at(0) == Vec3{0.1, 0.2, 0.3});
    check_near(f.at(2), {0.1, 0.2, 0.3}, 1e-15);
  }
  SUBCASE("identity gives a zero field") {
    TickInput in = translate_input(0, 1, {}, {0, 1, 2});
    in.delta = TransformDelta::identity();
    for (const auto &[id, d] : induced_displacements(in, pos)) {
      CHECK(d == Vec3{});
    }
  }
  SUBCASE("quarter turn about the origin") {
    TickInput in;
    in.op = R;
    in.delta = TransformDelta::rotate(Quat::from_axis_angle({0, 0, 1}, std::numbers::pi / 2));
    in.group = {1};
    check_near(induced_displacement(pos[1], in), {-1, 1, 0}, 1e-15);
  }
}

TEST_CASE("combine rules") {
  const Vec3 u1{-0.2, 0.1, 0};
  const Vec3 u2{0.4, 0.2, 0.1};
  check_near(resolve_additive(u1, u2), {0.2, 0.3, 0.1}, 1e-15);
  check_near(resolve_average(u1, u2), {0.1, 0.15, 0.05}, 1e-15);
  CHECK(resolve_intersection(u1, u2) == Vec3{0, 0.1, 0.1});
  CHECK(resolve_second_user(u1, 3, u2, 9) == u2);
  CHECK(resolve_second_user(u1, 9, u2, 3) == u1);

  const Vec3 d{0.3, -0.7, 0.25};
  CHECK(resolve_additive({}, d) == d);
  CHECK(resolve_additive(d, -d) == Vec3{});
  CHECK(resolve_average(d, d) == d);
  CHECK(resolve_average(d, -d) == Vec3{});
  CHECK(resolve_intersection(d, d) == d);
  CHECK(resolve_intersection({0.3, 0, 0}, {0.1, 0, 0}) == Vec3{0.1, 0, 0});
  CHECK(resolve_intersection({5e-8, 0, 0}, {-3e-8, 0, 0}) == Vec3{});
  CHECK(resolve_intersection({5e-8, 0, 0}, {-0.2, 0, 0}) == Vec3{-0.2, 0, 0});

  SUBCASE("algebraic properties") {
    Rng rng(41);
    for (int i = 0; i < 5000; ++i) {
      const Vec3 a = random_vec(rng, -1, 1);
      const Vec3 b = random_vec(rng, -1, 1);
      const Vec3 sum = resolve_additive(a, b);
      const Vec3 avg = resolve_average(a, b);
      CHECK(avg == sum * 0.5);
      CHECK(sum == resolve_additive(b, a));
      CHECK(avg == resolve_average(b, a));
      CHECK(resolve_second_user(a, 1, b, 2) == resolve_second_user(b, 2, a, 1));
      const Vec3 both = resolve_intersection(a, b);
      for (int axis = 0; axis < 3; ++axis) {
        CHECK(std::abs(both[axis]) <= std::min(std::abs(a[axis]), std::abs(b[axis])));
      }
    }
  }
}

TEST_CASE("combine_joint mixes operations by summing") {
  TickInput a = translate_input(0, 1, {0.1, 0, 0}, {0});
  TickInput b = translate_input(1, 2, {0, 0.1, 0}, {0});
  b.op = S;
  const StrategyConfig avg{StrategyKind::Averaging};
  CHECK(combine_joint(avg, a, {0.1, 0, 0}, b, {0, 0.1, 0}) == Vec3{0.1, 0.1, 0});
  b.op = T;
  CHECK(combine_joint(avg, a, {0.1, 0, 0}, b, {0, 0.1, 0}) == Vec3{0.05, 0.05, 0});
}

TEST_CASE("resolve_tick on the worked translation example") {
  const WireframeModel cube = gen_cube();
  const TickInput first = translate_input(0, 10, {-0.2, 0.1, 0}, {0, 1, 2, 3});
  const TickInput second = translate_input(1, 20, {0.4, 0.2, 0.1}, {2, 3, 4, 5});
  const std::vector<TickInput> inputs{first, second};
  const OverlapPartition groups = partition({0, 1, 2, 3}, {2, 3, 4, 5});

  auto run = [&](StrategyKind kind) {
    return resolve_tick(cube.positions, inputs, groups, StrategyConfig{kind});
  };
  auto moved = [&](const std::vector<Vec3> &out, VertexId v) { return out[v] - cube.positions[v]; };

  const std::vector<Vec3> avg = run(StrategyKind::Averaging);
  check_near(moved(avg, 0), {-0.2, 0.1, 0});
  check_near(moved(avg, 1), {-0.2, 0.1, 0});
  check_near(moved(avg, 2), {0.1, 0.15, 0.05});
  check_near(moved(avg, 3), {0.1, 0.15, 0.05});
  check_near(moved(avg, 4), {0.4, 0.2, 0.1});
  check_near(moved(avg, 5), {0.4, 0.2, 0.1});
  CHECK(avg[6] == cube.positions[6]);
  CHECK(avg[7] == cube.positions[7]);

  check_near(moved(run(StrategyKind::Additive), 2), {0.2, 0.3, 0.1});
  check_near(moved(run(StrategyKind::Intersection), 3), {0, 0.1, 0.1});
  check_near(moved(run(StrategyKind::SecondUserPriority), 2), {0.4, 0.2, 0.1});

  CHECK_THROWS_AS(run(StrategyKind::ObjectLevelRestriction), std::logic_error);
  const std::vector<TickInput> doubled{first, first};
  CHECK_THROWS_AS(resolve_tick(cube.positions, doubled, groups, StrategyConfig{}),
                  std::logic_error);
}

TEST_CASE("single grab is strategy independent and stays in its group") {
  Rng rng(8);
  std::vector<Vec3> pos;
  for (int i = 0; i < 8; ++i) {
    pos.push_back(random_vec(rng, 0, 1));
  }
  TickInput in;
  in.user = 1;
  in.op = R;
  in.seq = 4;
  in.pivot = {0.5, 0.5, 0.5};
  in.delta = TransformDelta::rotate(Quat::from_axis_angle(normalized(Vec3{1, 1, 0}), 0.2));
  in.group = {1, 3, 6};
  const std::vector<TickInput> inputs{in};
  const OverlapPartition groups = partition({}, {1, 3, 6});
  const std::vector<Vec3> reference =
      resolve_tick(pos, inputs, groups, StrategyConfig{StrategyKind::Additive});
  for (StrategyKind kind : kReactiveStrategies) {
    CHECK(resolve_tick(pos, inputs, groups, StrategyConfig{kind}) == reference);
  }
  for (VertexId v = 0; v < 8; ++v) {
    if (v == 1 || v == 3 || v == 6) {
      CHECK(reference[v] == apply_delta(pos[v], in.pivot, in.delta));
    } else {
      CHECK(reference[v] == pos[v]);
    }
  }
}

TEST_CASE("parallel kernel matches the serial reference bitwise") {
  Rng rng(99);
  const std::size_t n = 20000;
  std::vector<Vec3> pos(n);
  for (Vec3 &p : pos) {
    p = random_vec(rng, -1, 1);
  }
  std::vector<VertexId> ga;
  std::vector<VertexId> gb;
  for (std::size_t i = 0; i < n; ++i) {
    if (i < 12000) {
      ga.push_back(static_cast<VertexId>(i));
    }
    if (i >= 8000) {
      gb.push_back(static_cast<VertexId>(i));
    }
  }
  TickInput a;
  a.user = 0;
  a.op = R;
  a.seq = 5;
  a.pivot = {0.1, 0.2, 0.3};
  a.delta = TransformDelta::rotate(Quat::from_axis_angle(normalized(Vec3{1, 2, 3}), 0.05));
  a.group = ga;
  TickInput b = translate_input(1, 7, {0.01, -0.02, 0.005}, gb);
  const OverlapPartition groups =
      partition(VertexSet(ga.begin(), ga.end()), VertexSet(gb.begin(), gb.end()));
  for (StrategyKind kind : kReactiveStrategies) {
    b.op = kind == StrategyKind::Additive ? R : T;
    const std::vector<TickInput> inputs{a, b};
    CHECK(resolve_tick(pos, inputs, groups, StrategyConfig{kind}) ==
          resolve_tick_parallel(pos, inputs, groups, StrategyConfig{kind}));
  }
}

TEST_CASE("wire names") {
  for (StrategyKind kind : kAllStrategies) {
    CHECK(parse_strategy(to_string(kind)) == kind);
  }
  CHECK_THROWS_AS(parse_strategy("democracy"), ProtocolError);
  CHECK(parse_operation("scale") == S);
  CHECK_FALSE(parse_operation("shear").has_value());
  CHECK(to_string(DenyReason::AlrSameOp) == "alr_same_op");
}
