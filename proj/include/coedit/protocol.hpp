#pragma once

#include <string>
#include <string_view>
#include <variant>

#include <json.hpp>

#include "coedit/geometry.hpp"
#include "coedit/resolution.hpp"

namespace coedit::msg {

// Inbound messages. Every message is a JSON object with a "type" field.
struct Join {
  std::string name;
};
struct Select {
  VertexId vertex = 0;
};
struct Deselect {
  VertexId vertex = 0;
};
struct ConfirmGroup {};
struct CancelGroup {};
struct SetOp {
  OperationKind op = OperationKind::Translate;
};
struct Grab {
  VertexId vertex = 0;
  Vec3 handle;
};
struct Move {
  Vec3 handle;
};
struct Release {};
struct MatchCheck {};
/// Logged on the server's behalf when a connection goes away; never sent by clients.
struct Disconnect {};

using Inbound = std::variant<Join, Select, Deselect, ConfirmGroup, CancelGroup, SetOp, Grab, Move,
                             Release, MatchCheck, Disconnect>;

/// Throws ProtocolError on anything that is not a well-formed inbound message.
Inbound parse(const nlohmann::json &j);
/// Parses one line of text; throws ProtocolError on invalid JSON too.
Inbound parse_line(std::string_view line);

nlohmann::json to_json(const Inbound &m);

nlohmann::json deny(DenyReason reason, Seq seq);
nlohmann::json error(std::string_view what);
nlohmann::json peer_left();

} // namespace coedit::msg
