#include "coedit/server.hpp"

#include <array>
#include <chrono>
#include <deque>
#include <fstream>
#include <iostream>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace coedit {

namespace net = boost::asio;
namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using tcp = net::ip::tcp;
using nlohmann::json;

namespace {

const char *mime_type(const std::filesystem::path &p) {
  const std::string ext = p.extension().string();
  if (ext == ".html" || ext == ".htm") {
    return "text/html";
  }
  if (ext == ".js" || ext == ".mjs") {
    return "application/javascript";
  }
  if (ext == ".css") {
    return "text/css";
  }
  if (ext == ".json") {
    return "application/json";
  }
  if (ext == ".svg") {
    return "image/svg+xml";
  }
  if (ext == ".png") {
    return "image/png";
  }
  return "application/octet-stream";
}

} // namespace

class Connection;

struct Server::Impl {
  Impl(Session s, ServerConfig c)
      : session(std::move(s)), config(std::move(c)), acceptor(ioc), ticker(ioc),
        start(std::chrono::steady_clock::now()) {}

  TimeMs now() const {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                 start)
        .count();
  }

  void accept();
  void schedule_tick();
  void on_line(const std::shared_ptr<Connection> &conn, std::string_view line);
  void on_close(const std::shared_ptr<Connection> &conn);
  void dispatch(const StepResult &result, const std::shared_ptr<Connection> &requester);

  net::io_context ioc;
  Session session;
  ServerConfig config;
  tcp::acceptor acceptor;
  net::steady_timer ticker;
  std::chrono::steady_clock::time_point start;
  std::ofstream log;
  std::array<std::shared_ptr<Connection>, kUserCount> users;
  std::vector<std::weak_ptr<Connection>> connections;
};

class Connection : public std::enable_shared_from_this<Connection> {
public:
  Connection(tcp::socket socket, Server::Impl &server)
      : stream_(std::move(socket)), server_(server) {}

  void start() { read_request(); }

  void send(std::string text) {
    if (!ws_ || closed_) {
      return;
    }
    outbox_.push_back(std::move(text));
    if (outbox_.size() == 1) {
      write_next();
    }
  }

  void close() {
    if (closed_) {
      return;
    }
    closed_ = true;
    if (ws_) {
      ws_->async_close(websocket::close_code::normal,
                       [self = shared_from_this()](beast::error_code) {});
    }
  }

  std::optional<UserId> user;

private:
  void read_request() {
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       if (!ec) {
                         self->on_request();
                       }
                     });
  }

  void on_request() {
    if (websocket::is_upgrade(request_)) {
      ws_.emplace(std::move(stream_));
      ws_->text(true);
      ws_->async_accept(request_, [self = shared_from_this()](beast::error_code ec) {
        if (!ec) {
          self->read_frame();
        }
      });
      return;
    }
    serve_file();
  }

  void serve_file() {
    auto res = std::make_shared<http::response<http::string_body>>();
    res->version(request_.version());
    res->keep_alive(false);
    std::string target(request_.target());
    target = target.substr(0, target.find('?'));
    if (target.empty() || target.back() == '/') {
      target += "index.html";
    }
    const std::filesystem::path rel = std::filesystem::path(target).relative_path();
    const bool escapes = std::any_of(rel.begin(), rel.end(), [](const auto &part) { return part == ".."; });
    std::ifstream in;
    if (!server_.config.static_dir.empty() && !escapes &&
        request_.method() == http::verb::get &&
        std::filesystem::is_regular_file(server_.config.static_dir / rel)) {
      in.open(server_.config.static_dir / rel, std::ios::binary);
    }
    if (in.is_open()) {
      res->result(http::status::ok);
      res->set(http::field::content_type, mime_type(rel));
      res->body().assign(std::istreambuf_iterator<char>(in), {});
    } else {
      res->result(http::status::not_found);
      res->set(http::field::content_type, "text/plain");
      res->body() = "not found\n";
    }
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code, std::size_t) {
      beast::error_code ignored;
      self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
    });
  }

  void read_frame() {
    ws_->async_read(frame_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_frame(ec);
    });
  }

  void on_frame(beast::error_code ec) {
    if (ec) {
      closed_ = true;
      server_.on_close(shared_from_this());
      return;
    }
    const std::string text = beast::buffers_to_string(frame_.data());
    frame_.consume(frame_.size());
    std::size_t pos = 0;
    while (pos <= text.size() && !closed_) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string::npos) {
        end = text.size();
      }
      std::string_view line(text.data() + pos, end - pos);
      if (!line.empty() && line.back() == '\r') {
        line.remove_suffix(1);
      }
      if (line.find_first_not_of(" \t") != std::string_view::npos) {
        server_.on_line(shared_from_this(), line);
      }
      pos = end + 1;
    }
    if (closed_) {
      server_.on_close(shared_from_this());
      return;
    }
    read_frame();
  }

  void write_next() {
    ws_->async_write(net::buffer(outbox_.front()),
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->outbox_.pop_front();
                       if (ec) {
                         self->outbox_.clear();
                         return;
                       }
                       if (!self->outbox_.empty()) {
                         self->write_next();
                       }
                     });
  }

  beast::tcp_stream stream_;
  std::optional<websocket::stream<beast::tcp_stream>> ws_;
  beast::flat_buffer buffer_;
  beast::flat_buffer frame_;
  http::request<http::string_body> request_;
  std::deque<std::string> outbox_;
  bool closed_ = false;
  Server::Impl &server_;
};

void Server::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      return;
    }
    auto conn = std::make_shared<Connection>(std::move(socket), *this);
    std::erase_if(connections, [](const auto &w) { return w.expired(); });
    connections.push_back(conn);
    conn->start();
    accept();
  });
}

void Server::Impl::schedule_tick() {
  const std::int64_t next = session.tick() + 1;
  ticker.expires_at(start + std::chrono::nanoseconds(next * 1'000'000'000 / kTickHz));
  ticker.async_wait([this](beast::error_code ec) {
    if (ec) {
      return;
    }
    dispatch(session.advance_tick(now()), nullptr);
    schedule_tick();
  });
}

void Server::Impl::dispatch(const StepResult &result,
                            const std::shared_ptr<Connection> &requester) {
  for (const Outbound &out : result.outbound) {
    const std::string text = out.msg.dump() + "\n";
    if (!out.to) {
      for (const auto &conn : users) {
        if (conn) {
          conn->send(text);
        }
      }
    } else if (*out.to == kRequester) {
      if (requester) {
        requester->send(text);
      }
    } else if (const auto &conn = users.at(static_cast<std::size_t>(*out.to))) {
      conn->send(text);
    }
  }
}

void Server::Impl::on_line(const std::shared_ptr<Connection> &conn, std::string_view line) {
  if (conn->user) {
    const UserId u = *conn->user;
    const StepResult result = session.handle_line(u, line, now());
    dispatch(result, conn);
    if (result.drop_connection) {
      conn->close();
    }
    return;
  }
  const json j = json::parse(line, nullptr, false);
  if (!j.is_object() || j.value("type", "") != "join") {
    // Nothing is logged for connections that never joined.
    conn->send(msg::error("the first message must be join").dump() + "\n");
    conn->close();
    return;
  }
  const json name = j.value("name", json(""));
  const StepResult result =
      session.join(name.is_string() ? name.get<std::string>() : std::string{}, now());
  if (result.joined_as) {
    conn->user = *result.joined_as;
    users.at(static_cast<std::size_t>(*result.joined_as)) = conn;
  }
  dispatch(result, conn);
}

void Server::Impl::on_close(const std::shared_ptr<Connection> &conn) {
  if (!conn->user) {
    return;
  }
  const UserId u = *conn->user;
  conn->user.reset();
  if (users.at(static_cast<std::size_t>(u)) != conn) {
    return;
  }
  users.at(static_cast<std::size_t>(u)).reset();
  dispatch(session.disconnect(u, now()), nullptr);
}

Server::Server(Session session, ServerConfig config)
    : impl_(std::make_unique<Impl>(std::move(session), std::move(config))) {
  Impl &s = *impl_;
  if (!s.config.log_path.empty()) {
    s.log.open(s.config.log_path);
    if (!s.log) {
      throw std::runtime_error("cannot open log file " + s.config.log_path.string());
    }
    s.session.set_event_sink([&log = s.log](const SessionEvent &e) {
      log << to_json(e).dump() << '\n';
      log.flush();
    });
  }
  s.session.set_retain_events(false);
  try {
    const tcp::endpoint endpoint(net::ip::make_address(s.config.address), s.config.port);
    s.acceptor.open(endpoint.protocol());
    s.acceptor.set_option(net::socket_base::reuse_address(true));
    s.acceptor.bind(endpoint);
    s.acceptor.listen();
  } catch (const boost::system::system_error &e) {
    throw std::runtime_error("cannot listen on " + s.config.address + ":" +
                             std::to_string(s.config.port) + ": " + e.what());
  }
}

Server::~Server() = default;

unsigned short Server::port() const { return impl_->acceptor.local_endpoint().port(); }

void Server::run() {
  impl_->accept();
  impl_->schedule_tick();
  impl_->ioc.run();
}

void Server::stop() {
  net::post(impl_->ioc, [impl = impl_.get()] {
    beast::error_code ignored;
    impl->acceptor.close(ignored);
    impl->ticker.cancel();
    for (const auto &w : impl->connections) {
      if (auto conn = w.lock()) {
        conn->close();
      }
    }
    impl->ioc.stop();
  });
}

} // namespace coedit
