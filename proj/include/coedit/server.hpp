#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "coedit/session.hpp"

namespace coedit {

struct ServerConfig {
  std::string address = "127.0.0.1";
  /// 0 picks a free port.
  unsigned short port = 8080;
  /// Event log, one JSON object per line, written as the session runs. Empty: no log.
  std::filesystem::path log_path;
  /// Plain HTTP GET requests are answered from here. Empty: 404.
  std::filesystem::path static_dir;
};

/// WebSocket front end for one Session. Each text frame carries one or more
/// newline-separated JSON messages; every outbound message is one frame ending in '\n'.
/// All session work runs on the thread that calls run().
class Server {
public:
  /// Binds the listening socket. Throws std::runtime_error when the port is
  /// unavailable or the log cannot be opened.
  Server(Session session, ServerConfig config);
  ~Server();

  Server(const Server &) = delete;
  Server &operator=(const Server &) = delete;

  unsigned short port() const;

  /// Accepts clients and ticks at kTickHz until stop().
  void run();
  /// Safe from any thread.
  void stop();

private:
  struct Impl;
  friend class Connection;
  std::unique_ptr<Impl> impl_;
};

} // namespace coedit
