#include "coedit/model.hpp"

#include <algorithm>
#include <fstream>

namespace coedit {

using nlohmann::json;

void WireframeModel::validate() const {
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!is_finite(positions[i])) {
      throw DomainError("vertex " + std::to_string(i) + " has a non-finite position");
    }
  }
  for (const Edge &e : edges) {
    if (!has_vertex(e[0]) || !has_vertex(e[1])) {
      throw DomainError("edge references an unknown vertex");
    }
    if (e[0] == e[1] || positions[e[0]] == positions[e[1]]) {
      throw DomainError("zero-length edge " + std::to_string(e[0]) + "-" + std::to_string(e[1]));
    }
  }
  for (const Face &f : faces) {
    if (f.size() < 3) {
      throw DomainError("face with fewer than three vertices");
    }
    if (!std::all_of(f.begin(), f.end(), [this](VertexId id) { return has_vertex(id); })) {
      throw DomainError("face references an unknown vertex");
    }
  }
}

PositionMap WireframeModel::subset(std::span<const VertexId> ids) const {
  PositionMap out;
  for (VertexId id : ids) {
    out.emplace(id, positions.at(static_cast<std::size_t>(id)));
  }
  return out;
}

json to_json(const Vec3 &v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from_json(const json &j) {
  if (!j.is_array() || j.size() != 3 || !j[0].is_number() || !j[1].is_number() ||
      !j[2].is_number()) {
    throw LoadError("expected [x, y, z], got " + j.dump());
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json to_json(const WireframeModel &model) {
  json vertices = json::array();
  for (std::size_t i = 0; i < model.positions.size(); ++i) {
    vertices.push_back({{"id", i}, {"pos", to_json(model.positions[i])}});
  }
  return {{"vertices", std::move(vertices)}, {"edges", model.edges}, {"faces", model.faces}};
}

WireframeModel model_from_json(const json &j) {
  WireframeModel model;
  try {
    const json &vertices = j.at("vertices");
    model.positions.resize(vertices.size());
    std::vector<bool> seen(vertices.size(), false);
    for (const json &v : vertices) {
      const auto id = v.at("id").get<long long>();
      if (id < 0 || static_cast<std::size_t>(id) >= vertices.size() || seen[id]) {
        throw LoadError("vertex ids must be unique and dense from 0");
      }
      seen[id] = true;
      model.positions[id] = vec3_from_json(v.at("pos"));
    }
    if (j.contains("edges")) {
      model.edges = j.at("edges").get<std::vector<Edge>>();
    }
    if (j.contains("faces")) {
      model.faces = j.at("faces").get<std::vector<Face>>();
    }
  } catch (const json::exception &e) {
    throw LoadError(std::string("malformed model: ") + e.what());
  }
  try {
    model.validate();
  } catch (const DomainError &e) {
    throw LoadError(std::string("invalid model: ") + e.what());
  }
  return model;
}

WireframeModel load_model(const std::filesystem::path &path) {
  std::ifstream in(path);
  if (!in) {
    throw LoadError("cannot open model file " + path.string());
  }
  json j;
  try {
    in >> j;
  } catch (const json::exception &e) {
    throw LoadError(path.string() + ": " + e.what());
  }
  return model_from_json(j);
}

void save_model(const WireframeModel &model, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) {
    throw LoadError("cannot write " + path.string());
  }
  out << to_json(model).dump(2) << '\n';
}

MatchResult match_check(const WireframeModel &model, const WireframeModel &target,
                        double threshold) {
  if (model.vertex_count() != target.vertex_count()) {
    throw DomainError("model and target have different vertex sets");
  }
  MatchResult result;
  result.distances.reserve(model.vertex_count());
  for (std::size_t i = 0; i < model.vertex_count(); ++i) {
    const double d = distance(model.positions[i], target.positions[i]);
    result.distances.push_back(d);
    result.max_error = std::max(result.max_error, d);
  }
  result.matched = result.max_error <= threshold;
  return result;
}

} // namespace coedit
