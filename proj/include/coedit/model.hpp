#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "coedit/geometry.hpp"

namespace coedit {

using Edge = std::array<VertexId, 2>;
using Face = std::vector<VertexId>;

/// The shared document. Vertex ids are dense: vertex i lives at positions[i].
struct WireframeModel {
  std::vector<Vec3> positions;
  std::vector<Edge> edges;
  std::vector<Face> faces;

  std::size_t vertex_count() const { return positions.size(); }
  bool has_vertex(VertexId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < positions.size();
  }

  /// Throws DomainError on dangling references, zero-length edges or non-finite positions.
  void validate() const;

  PositionMap subset(std::span<const VertexId> ids) const;

  friend bool operator==(const WireframeModel &, const WireframeModel &) = default;
};

/// Raised for unreadable or schema-violating model, scenario and log files.
class LoadError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

nlohmann::json to_json(const WireframeModel &model);
/// Parses {"vertices":[{"id","pos"}],"edges","faces"} and validates it.
WireframeModel model_from_json(const nlohmann::json &j);

WireframeModel load_model(const std::filesystem::path &path);
void save_model(const WireframeModel &model, const std::filesystem::path &path);

nlohmann::json to_json(const Vec3 &v);
Vec3 vec3_from_json(const nlohmann::json &j);

/// Euclidean distance per vertex plus the overall verdict at `threshold` (inclusive).
struct MatchResult {
  bool matched = false;
  double max_error = 0.0;
  std::vector<double> distances;
};

inline constexpr double kMatchThreshold = 0.05;

/// Throws DomainError when the two models disagree on vertex count.
MatchResult match_check(const WireframeModel &model, const WireframeModel &target,
                        double threshold = kMatchThreshold);

} // namespace coedit
