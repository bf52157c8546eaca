#include "astmon/gateway.hpp"

#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>
#include <utility>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

namespace astmon {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

void CommandQueue::push(Command command) {
  {
    std::lock_guard lock(mutex_);
    commands_.push_back(command);
  }
  cv_.notify_one();
}

std::optional<Command> CommandQueue::try_pop() {
  std::lock_guard lock(mutex_);
  if (commands_.empty()) return std::nullopt;
  Command c = commands_.front();
  commands_.pop_front();
  return c;
}

std::optional<Command> CommandQueue::pop_until(Clock::time_point deadline) {
  std::unique_lock lock(mutex_);
  if (!cv_.wait_until(lock, deadline, [&] { return !commands_.empty(); })) return std::nullopt;
  Command c = commands_.front();
  commands_.pop_front();
  return c;
}

std::size_t CommandQueue::size() const {
  std::lock_guard lock(mutex_);
  return commands_.size();
}

std::string hello_message(const json& plan) {
  return json{{"type", "hello"}, {"plan", plan}}.dump() + "\n";
}

namespace {

constexpr const char* kPlaceholderPage =
    "<!doctype html><html><head><meta charset=\"utf-8\"><title>astmon</title></head>"
    "<body><p>Cockpit assets are not installed. Telemetry is available on <code>/ws</code>, "
    "<code>/status</code> and <code>/session</code>.</p></body></html>\n";

std::string content_type(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  return "application/octet-stream";
}

}  // namespace

struct Gateway::Impl {
  class WsSession;
  class HttpSession;

  Impl(GatewayConfig cfg, CommandQueue& queue, json plan)
      : config(std::move(cfg)), commands(queue), hello(hello_message(plan)) {}

  GatewayConfig config;
  CommandQueue& commands;
  const std::string hello;

  net::io_context ioc{1};
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work;
  std::optional<tcp::acceptor> acceptor;
  std::thread thread;
  std::atomic<unsigned short> bound_port{0};

  // touched on the I/O thread only
  std::vector<std::weak_ptr<WsSession>> sessions;

  std::atomic<std::size_t> clients{0};
  std::atomic<std::uint64_t> slow_dropped{0};
  std::atomic<std::uint64_t> rejected{0};

  mutable std::mutex snapshot_mutex;
  std::string latest_frame;
  std::string session_summary = "{}";

  void do_accept();
  void fan_out(std::shared_ptr<const std::string> message);
};

class Gateway::Impl::WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket socket, Impl* owner)
      : ws_(std::move(socket)), owner_(owner) {}

  void run(http::request<http::string_body> request) {
    if (owner_->config.send_buffer_bytes) {
      beast::error_code ignored;
      beast::get_lowest_layer(ws_).socket().set_option(
          net::socket_base::send_buffer_size(*owner_->config.send_buffer_bytes), ignored);
    }
    ws_.text(true);
    ws_.async_accept(request, [self = shared_from_this()](beast::error_code ec) {
      self->on_accept(ec);
    });
  }

  /// Queues a message; drops the client if it has fallen too far behind.
  void send(std::shared_ptr<const std::string> message) {
    if (closed_) return;
    const auto now = Clock::now();
    if (!queue_.empty() && (now - queue_.front().second > owner_->config.stall_limit ||
                            queue_.size() >= owner_->config.max_queued_messages)) {
      ++owner_->slow_dropped;
      abort();
      return;
    }
    queue_.emplace_back(std::move(message), now);
    if (!writing_) do_write();
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    open_ = true;
    ++owner_->clients;
    owner_->sessions.push_back(weak_from_this());
    send(std::make_shared<const std::string>(owner_->hello));
    do_read();
  }

  void do_read() {
    ws_.async_read(buffer_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      self->on_read(ec);
    });
  }

  void on_read(beast::error_code ec) {
    if (ec) {
      close_session();
      return;
    }
    const std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.find_first_not_of(" \t") == std::string::npos) continue;
      auto parsed = parse_command_message(line);
      if (auto* command = std::get_if<Command>(&parsed)) {
        owner_->commands.push(*command);
      } else {
        ++owner_->rejected;
        send(std::make_shared<const std::string>(
            json{{"type", "error"}, {"error", std::get<std::string>(parsed)}}.dump() + "\n"));
      }
    }
    if (!closed_) do_read();
  }

  void do_write() {
    writing_ = true;
    inflight_ = queue_.front().first;
    ws_.async_write(net::buffer(*inflight_),
                    [self = shared_from_this()](beast::error_code ec, std::size_t) {
                      self->on_write(ec);
                    });
  }

  void on_write(beast::error_code ec) {
    writing_ = false;
    inflight_.reset();
    if (ec) {
      close_session();
      return;
    }
    if (closed_) return;
    queue_.pop_front();
    if (!queue_.empty() && !closed_) do_write();
  }

  void abort() {
    beast::error_code ignored;
    beast::get_lowest_layer(ws_).socket().shutdown(tcp::socket::shutdown_both, ignored);
    beast::get_lowest_layer(ws_).socket().close(ignored);
    close_session();
  }

  void close_session() {
    if (closed_) return;
    closed_ = true;
    queue_.clear();
    if (open_) --owner_->clients;
  }

  websocket::stream<beast::tcp_stream> ws_;
  Impl* owner_;
  beast::flat_buffer buffer_;
  std::deque<std::pair<std::shared_ptr<const std::string>, Clock::time_point>> queue_;
  std::shared_ptr<const std::string> inflight_;
  bool writing_ = false;
  bool open_ = false;
  bool closed_ = false;
};

class Gateway::Impl::HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket socket, Impl* owner)
      : stream_(std::move(socket)), owner_(owner) {}

  void run() { do_read(); }

 private:
  void do_read() {
    request_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, request_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) {
                       self->on_read(ec);
                     });
  }

  void on_read(beast::error_code ec) {
    if (ec) return;
    if (websocket::is_upgrade(request_)) {
      if (request_.target() == "/ws") {
        stream_.expires_never();
        std::make_shared<WsSession>(stream_.release_socket(), owner_)->run(std::move(request_));
        return;
      }
      respond(http::status::not_found, "text/plain", "no such endpoint\n");
      return;
    }
    if (request_.method() != http::verb::get && request_.method() != http::verb::head) {
      respond(http::status::method_not_allowed, "text/plain", "read-only endpoint\n");
      return;
    }

    const std::string target(request_.target());
    if (target == "/status") {
      std::string frame;
      {
        std::lock_guard lock(owner_->snapshot_mutex);
        frame = owner_->latest_frame;
      }
      if (frame.empty()) {
        respond(http::status::no_content, "application/json", "");
      } else {
        respond(http::status::ok, "application/json", frame);
      }
      return;
    }
    if (target == "/session") {
      std::string summary;
      {
        std::lock_guard lock(owner_->snapshot_mutex);
        summary = owner_->session_summary;
      }
      respond(http::status::ok, "application/json", summary);
      return;
    }
    serve_static(target);
  }

  void serve_static(std::string target) {
    const auto query = target.find('?');
    if (query != std::string::npos) target.resize(query);
    if (owner_->config.www_dir.empty()) {
      if (target == "/" || target == "/index.html") {
        respond(http::status::ok, "text/html; charset=utf-8", kPlaceholderPage);
      } else {
        respond(http::status::not_found, "text/plain", "not found\n");
      }
      return;
    }
    if (target.empty() || target.front() != '/' || target.find("..") != std::string::npos) {
      respond(http::status::bad_request, "text/plain", "bad path\n");
      return;
    }
    if (target.back() == '/') target += "index.html";
    const auto path = owner_->config.www_dir / target.substr(1);
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      respond(http::status::not_found, "text/plain", "not found\n");
      return;
    }
    std::ostringstream body;
    body << in.rdbuf();
    respond(http::status::ok, content_type(path), body.str());
  }

  void respond(http::status status, const std::string& type, std::string body) {
    auto response = std::make_shared<http::response<http::string_body>>(status, request_.version());
    response->set(http::field::server, "astmon");
    response->set(http::field::content_type, type);
    response->keep_alive(request_.keep_alive());
    if (request_.method() != http::verb::head) response->body() = std::move(body);
    response->prepare_payload();
    http::async_write(stream_, *response,
                      [self = shared_from_this(), response](beast::error_code ec, std::size_t) {
                        if (ec) return;
                        if (response->need_eof()) {
                          beast::error_code ignored;
                          self->stream_.socket().shutdown(tcp::socket::shutdown_send, ignored);
                          return;
                        }
                        self->do_read();
                      });
  }

  beast::tcp_stream stream_;
  Impl* owner_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> request_;
};

void Gateway::Impl::do_accept() {
  acceptor->async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (ec) {
      if (ec == net::error::operation_aborted) return;
    } else {
      socket.set_option(tcp::no_delay(true));
      std::make_shared<HttpSession>(std::move(socket), this)->run();
    }
    if (acceptor && acceptor->is_open()) do_accept();
  });
}

void Gateway::Impl::fan_out(std::shared_ptr<const std::string> message) {
  std::erase_if(sessions, [](const std::weak_ptr<WsSession>& s) { return s.expired(); });
  for (auto& weak : sessions) {
    if (auto session = weak.lock()) session->send(message);
  }
}

Gateway::Gateway(GatewayConfig config, CommandQueue& commands, json plan)
    : impl_(std::make_unique<Impl>(std::move(config), commands, std::move(plan))) {}

Gateway::~Gateway() { stop(); }

void Gateway::start() {
  auto& impl = *impl_;
  beast::error_code ec;
  const auto address = net::ip::make_address(impl.config.host, ec);
  if (ec) throw std::runtime_error("bad gateway host " + impl.config.host + ": " + ec.message());
  const tcp::endpoint endpoint(address, impl.config.port);

  impl.acceptor.emplace(impl.ioc);
  impl.acceptor->open(endpoint.protocol(), ec);
  if (!ec) impl.acceptor->set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) impl.acceptor->bind(endpoint, ec);
  if (!ec) impl.acceptor->listen(net::socket_base::max_listen_connections, ec);
  if (ec) {
    throw std::runtime_error("cannot listen on " + impl.config.host + ":" +
                             std::to_string(impl.config.port) + ": " + ec.message());
  }
  impl.bound_port = impl.acceptor->local_endpoint().port();
  impl.work.emplace(net::make_work_guard(impl.ioc));
  impl.do_accept();
  impl.thread = std::thread([&impl] { impl.ioc.run(); });
}

void Gateway::stop() {
  auto& impl = *impl_;
  if (!impl.thread.joinable()) return;
  net::post(impl.ioc, [&impl] {
    beast::error_code ignored;
    if (impl.acceptor) impl.acceptor->close(ignored);
  });
  impl.work.reset();
  impl.ioc.stop();
  impl.thread.join();
}

unsigned short Gateway::port() const noexcept { return impl_->bound_port; }

void Gateway::on_frame(const TelemetryFrame& frame) {
  auto message = std::make_shared<const std::string>(frame_to_json(frame).dump() + "\n");
  {
    std::lock_guard lock(impl_->snapshot_mutex);
    impl_->latest_frame = *message;
  }
  net::post(impl_->ioc, [impl = impl_.get(), message] { impl->fan_out(message); });
}

void Gateway::on_session(const json& summary) {
  std::lock_guard lock(impl_->snapshot_mutex);
  impl_->session_summary = summary.dump();
}

std::size_t Gateway::client_count() const noexcept { return impl_->clients; }
std::uint64_t Gateway::slow_clients_dropped() const noexcept { return impl_->slow_dropped; }
std::uint64_t Gateway::rejected_messages() const noexcept { return impl_->rejected; }

}  // namespace astmon
