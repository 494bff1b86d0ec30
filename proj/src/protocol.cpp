#include "coedit/protocol.hpp"

#include <cmath>
#include <limits>

#include "coedit/model.hpp"

namespace coedit::msg {

using nlohmann::json;

namespace {

const json &field(const json &j, const char *key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ProtocolError(std::string("missing field '") + key + "'");
  }
  return *it;
}

VertexId vertex_field(const json &j) {
  const json &v = field(j, "vertex");
  if (!v.is_number_integer()) {
    throw ProtocolError("'vertex' must be an integer");
  }
  const auto id = v.get<long long>();
  if (id < std::numeric_limits<VertexId>::min() || id > std::numeric_limits<VertexId>::max()) {
    throw ProtocolError("'vertex' out of range");
  }
  return static_cast<VertexId>(id);
}

Vec3 handle_field(const json &j) {
  Vec3 h;
  try {
    h = vec3_from_json(field(j, "handle"));
  } catch (const LoadError &e) {
    throw ProtocolError(std::string("'handle': ") + e.what());
  }
  if (!is_finite(h)) {
    throw ProtocolError("'handle' must be finite");
  }
  return h;
}

} // namespace

Inbound parse(const json &j) {
  if (!j.is_object()) {
    throw ProtocolError("message must be a JSON object");
  }
  const json &type = field(j, "type");
  if (!type.is_string()) {
    throw ProtocolError("'type' must be a string");
  }
  const auto &t = type.get_ref<const std::string &>();
  if (t == "join") {
    const auto it = j.find("name");
    if (it != j.end() && !it->is_string()) {
      throw ProtocolError("'name' must be a string");
    }
    return Join{it != j.end() ? it->get<std::string>() : std::string{}};
  }
  if (t == "select") {
    return Select{vertex_field(j)};
  }
  if (t == "deselect") {
    return Deselect{vertex_field(j)};
  }
  if (t == "confirm_group") {
    return ConfirmGroup{};
  }
  if (t == "cancel_group") {
    return CancelGroup{};
  }
  if (t == "set_op") {
    const json &op = field(j, "op");
    const auto parsed = op.is_string() ? parse_operation(op.get_ref<const std::string &>())
                                       : std::nullopt;
    if (!parsed) {
      throw ProtocolError("'op' must be one of translate, rotate, scale");
    }
    return SetOp{*parsed};
  }
  if (t == "grab") {
    return Grab{vertex_field(j), handle_field(j)};
  }
  if (t == "move") {
    return Move{handle_field(j)};
  }
  if (t == "release") {
    return Release{};
  }
  if (t == "match_check") {
    return MatchCheck{};
  }
  if (t == "disconnect") {
    return Disconnect{};
  }
  throw ProtocolError("unknown message type '" + t + "'");
}

Inbound parse_line(std::string_view line) {
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) {
    throw ProtocolError("message is not valid JSON");
  }
  return parse(j);
}

json to_json(const Inbound &m) {
  struct Visitor {
    json operator()(const Join &x) const { return {{"type", "join"}, {"name", x.name}}; }
    json operator()(const Select &x) const { return {{"type", "select"}, {"vertex", x.vertex}}; }
    json operator()(const Deselect &x) const {
      return {{"type", "deselect"}, {"vertex", x.vertex}};
    }
    json operator()(const ConfirmGroup &) const { return {{"type", "confirm_group"}}; }
    json operator()(const CancelGroup &) const { return {{"type", "cancel_group"}}; }
    json operator()(const SetOp &x) const { return {{"type", "set_op"}, {"op", to_string(x.op)}}; }
    json operator()(const Grab &x) const {
      return {{"type", "grab"}, {"vertex", x.vertex}, {"handle", coedit::to_json(x.handle)}};
    }
    json operator()(const Move &x) const {
      return {{"type", "move"}, {"handle", coedit::to_json(x.handle)}};
    }
    json operator()(const Release &) const { return {{"type", "release"}}; }
    json operator()(const MatchCheck &) const { return {{"type", "match_check"}}; }
    json operator()(const Disconnect &) const { return {{"type", "disconnect"}}; }
  };
  return std::visit(Visitor{}, m);
}

json deny(DenyReason reason, Seq seq) {
  return {{"type", "deny"}, {"reason", to_string(reason)}, {"seq", seq}};
}

json error(std::string_view what) { return {{"type", "error"}, {"message", what}}; }

json peer_left() { return {{"type", "peer_left"}}; }

} // namespace coedit::msg
