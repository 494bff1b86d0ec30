#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "coedit/model.hpp"
#include "coedit/resolution.hpp"

namespace coedit {

class GenerationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned 1 m cube with corners at {0,1}^3. Vertex id = x + 2y + 4z.
WireframeModel gen_cube();

struct TargetSpec {
  std::uint64_t seed = 0;
  int faces_transformed = 2;
  int ops_per_face = 2;
  std::vector<OperationKind> op_pool{OperationKind::Translate, OperationKind::Rotate,
                                     OperationKind::Scale};
  /// Per-axis translation magnitude, meters; sign is random.
  double translation_min = 0.1;
  double translation_max = 0.4;
  /// Rotation angle about a random coordinate axis, degrees; sign is random.
  double rotation_min_deg = 15.0;
  double rotation_max_deg = 60.0;
  double scale_min = 0.6;
  double scale_max = 1.6;
  double threshold = kMatchThreshold;
};

/// Study-2 style: three faces, three operations each.
TargetSpec study2_spec(std::uint64_t seed);

inline constexpr int kMaxGenerationAttempts = 100;

/// Transforms `faces_transformed` edge-connected faces of `base`, each by
/// `ops_per_face` sampled operations about the face centroid at application time.
/// A candidate is kept only if every transformed face has a vertex further than
/// `threshold` from the base; otherwise the seed is incremented and it retries.
/// Throws GenerationError after kMaxGenerationAttempts or for impossible specs.
WireframeModel gen_target(const WireframeModel &base, const TargetSpec &spec);

} // namespace coedit
