#include <doctest.h>

#include "coedit/scenariogen.hpp"

using namespace coedit;

TEST_CASE("cube") {
  const WireframeModel cube = gen_cube();
  CHECK(cube.vertex_count() == 8);
  CHECK(cube.edges.size() == 12);
  CHECK(cube.faces.size() == 6);
  for (const auto &[a, b] : cube.edges) {
    CHECK(distance(cube.positions[a], cube.positions[b]) == 1.0);
  }
  CHECK(centroid(cube.positions) == Vec3{0.5, 0.5, 0.5});
  CHECK(cube.positions[5] == Vec3{1, 0, 1});
  CHECK_NOTHROW(cube.validate());
}

TEST_CASE("targets") {
  const WireframeModel cube = gen_cube();
  SUBCASE("same seed, same target") {
    TargetSpec spec;
    spec.seed = 7;
    CHECK(gen_target(cube, spec).positions == gen_target(cube, spec).positions);
    spec.seed = 8;
    TargetSpec other;
    other.seed = 7;
    CHECK(gen_target(cube, spec).positions != gen_target(cube, other).positions);
  }
  SUBCASE("topology is kept and the target never matches") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      const WireframeModel t = gen_target(cube, study2_spec(seed));
      CHECK(t.edges == cube.edges);
      CHECK(t.faces == cube.faces);
      CHECK_FALSE(match_check(cube, t).matched);
      // At least three faces carry a vertex that moved past the threshold.
      int moved_faces = 0;
      for (const auto &face : t.faces) {
        bool moved = false;
        for (VertexId v : face) {
          moved = moved || distance(t.positions[v], cube.positions[v]) > kMatchThreshold;
        }
        moved_faces += moved;
      }
      CHECK(moved_faces >= 3);
    }
  }
  SUBCASE("zero magnitudes cannot produce a target") {
    TargetSpec spec;
    spec.translation_min = spec.translation_max = 0.0;
    spec.rotation_min_deg = spec.rotation_max_deg = 0.0;
    spec.scale_min = spec.scale_max = 1.0;
    CHECK_THROWS_AS(gen_target(cube, spec), GenerationError);
  }
  SUBCASE("impossible specs") {
    TargetSpec spec;
    spec.faces_transformed = 7;
    CHECK_THROWS_AS(gen_target(cube, spec), GenerationError);
    spec.faces_transformed = 1;
    CHECK_THROWS_AS(gen_target(cube, spec), GenerationError);
    spec.faces_transformed = 2;
    spec.ops_per_face = 1;
    CHECK_THROWS_AS(gen_target(cube, spec), GenerationError);
    spec.ops_per_face = 2;
    spec.op_pool.clear();
    CHECK_THROWS_AS(gen_target(cube, spec), GenerationError);
  }
}
