#include "coedit/scenariogen.hpp"

#include <algorithm>
#include <numbers>

#include "coedit/rng.hpp"

namespace coedit {

WireframeModel gen_cube() {
  WireframeModel cube;
  for (int id = 0; id < 8; ++id) {
    cube.positions.push_back({double(id & 1), double((id >> 1) & 1), double((id >> 2) & 1)});
  }
  for (int bit : {1, 2, 4}) {
    for (int id = 0; id < 8; ++id) {
      if ((id & bit) == 0) {
        cube.edges.push_back({id, id | bit});
      }
    }
  }
  for (int bit : {1, 2, 4}) {
    const int b1 = bit == 1 ? 2 : 1;
    const int b2 = bit == 4 ? 2 : 4;
    for (int base : {0, bit}) {
      cube.faces.push_back({base, base + b1, base + b1 + b2, base + b2});
    }
  }
  return cube;
}

TargetSpec study2_spec(std::uint64_t seed) {
  TargetSpec spec;
  spec.seed = seed;
  spec.faces_transformed = 3;
  spec.ops_per_face = 3;
  return spec;
}

namespace {

std::size_t shared_vertices(const Face &a, const Face &b) {
  return static_cast<std::size_t>(std::count_if(a.begin(), a.end(), [&](VertexId id) {
    return std::find(b.begin(), b.end(), id) != b.end();
  }));
}

std::vector<std::size_t> pick_faces(const WireframeModel &base, int count, Rng &rng) {
  std::vector<std::size_t> chosen{static_cast<std::size_t>(rng.below(base.faces.size()))};
  while (chosen.size() < static_cast<std::size_t>(count)) {
    std::vector<std::size_t> candidates;
    for (std::size_t f = 0; f < base.faces.size(); ++f) {
      if (std::find(chosen.begin(), chosen.end(), f) != chosen.end()) {
        continue;
      }
      const bool adjacent = std::any_of(chosen.begin(), chosen.end(), [&](std::size_t c) {
        return shared_vertices(base.faces[f], base.faces[c]) >= 2;
      });
      if (adjacent) {
        candidates.push_back(f);
      }
    }
    if (candidates.empty()) {
      throw GenerationError("not enough edge-adjacent faces");
    }
    chosen.push_back(candidates[rng.below(candidates.size())]);
  }
  return chosen;
}

TransformDelta sample_op(OperationKind op, const TargetSpec &spec, Rng &rng) {
  switch (op) {
  case OperationKind::Translate: {
    Vec3 t;
    for (int axis = 0; axis < 3; ++axis) {
      t[axis] = rng.sign() * rng.uniform(spec.translation_min, spec.translation_max);
    }
    return TransformDelta::translate(t);
  }
  case OperationKind::Rotate: {
    Vec3 axis;
    axis[static_cast<int>(rng.below(3))] = 1.0;
    const double deg = rng.sign() * rng.uniform(spec.rotation_min_deg, spec.rotation_max_deg);
    return TransformDelta::rotate(Quat::from_axis_angle(axis, deg * std::numbers::pi / 180.0));
  }
  case OperationKind::Scale:
    return TransformDelta::uniform_scale(rng.uniform(spec.scale_min, spec.scale_max));
  }
  return TransformDelta::identity();
}

bool acceptable(const WireframeModel &base, const WireframeModel &candidate,
                const std::vector<std::size_t> &faces, double threshold) {
  try {
    candidate.validate();
  } catch (const DomainError &) {
    return false;
  }
  for (std::size_t f : faces) {
    const Face &face = base.faces[f];
    const bool moved = std::any_of(face.begin(), face.end(), [&](VertexId id) {
      return distance(base.positions[id], candidate.positions[id]) > threshold;
    });
    if (!moved) {
      return false;
    }
  }
  return !match_check(candidate, base, threshold).matched;
}

} // namespace

WireframeModel gen_target(const WireframeModel &base, const TargetSpec &spec) {
  if (spec.faces_transformed < 2 || spec.ops_per_face < 2) {
    throw GenerationError("targets need at least two faces and two operations per face");
  }
  if (static_cast<std::size_t>(spec.faces_transformed) > base.faces.size()) {
    throw GenerationError("more faces requested than the base model has");
  }
  if (spec.op_pool.empty()) {
    throw GenerationError("empty operation pool");
  }
  if (!(spec.scale_min > 0.0) || spec.scale_max < spec.scale_min ||
      spec.translation_max < spec.translation_min ||
      spec.rotation_max_deg < spec.rotation_min_deg) {
    throw GenerationError("invalid magnitude ranges");
  }
  for (int attempt = 0; attempt < kMaxGenerationAttempts; ++attempt) {
    Rng rng(spec.seed + static_cast<std::uint64_t>(attempt));
    const std::vector<std::size_t> faces = pick_faces(base, spec.faces_transformed, rng);
    WireframeModel candidate = base;
    for (std::size_t f : faces) {
      const Face &face = base.faces[f];
      for (int k = 0; k < spec.ops_per_face; ++k) {
        const OperationKind op = spec.op_pool[rng.below(spec.op_pool.size())];
        const TransformDelta delta = sample_op(op, spec, rng);
        const Vec3 pivot = centroid(candidate.subset(face));
        for (VertexId id : face) {
          candidate.positions[id] = apply_delta(candidate.positions[id], pivot, delta);
        }
      }
    }
    if (acceptable(base, candidate, faces, spec.threshold)) {
      return candidate;
    }
  }
  throw GenerationError("no acceptable target after " + std::to_string(kMaxGenerationAttempts) +
                        " attempts");
}

} // namespace coedit
