#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "astmon/host.hpp"
#include "astmon/telemetry.hpp"
#include "json.hpp"

namespace astmon {

inline constexpr unsigned short kDefaultPort = 8765;

/// Multi-producer queue of operator commands, consumed by the engine loop
/// in arrival order.
class CommandQueue {
 public:
  void push(Command command);
  std::optional<Command> try_pop();
  /// Blocks until a command arrives or `deadline` passes.
  std::optional<Command> pop_until(std::chrono::steady_clock::time_point deadline);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Command> commands_;
};

struct GatewayConfig {
  std::string host = "127.0.0.1";
  unsigned short port = kDefaultPort;  // 0 picks a free port
  /// Static cockpit assets served at `/`; empty serves a placeholder page.
  std::filesystem::path www_dir;
  /// A client whose oldest unsent message is older than this is dropped.
  std::chrono::milliseconds stall_limit{2000};
  std::size_t max_queued_messages = 256;
  /// Kernel send buffer per WebSocket client, if set.
  std::optional<int> send_buffer_bytes;
};

/// Local network face of the head unit. Pushes one telemetry message per
/// frame to every WebSocket client on `/ws`, turns client messages into
/// commands on the queue, and answers `/status` and `/session` over HTTP.
///
/// The gateway only ever sees snapshots and the command queue; it has no
/// handle on the engine.
class Gateway final : public TelemetrySink {
 public:
  Gateway(GatewayConfig config, CommandQueue& commands, nlohmann::json plan);
  ~Gateway() override;

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// Binds and starts the I/O thread. Throws std::runtime_error on failure.
  void start();
  void stop();

  /// Bound port, valid after start().
  unsigned short port() const noexcept;

  void on_frame(const TelemetryFrame& frame) override;
  void on_session(const nlohmann::json& summary) override;

  std::size_t client_count() const noexcept;
  std::uint64_t slow_clients_dropped() const noexcept;
  std::uint64_t rejected_messages() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// `{"type":"hello","plan":{...}}`
std::string hello_message(const nlohmann::json& plan);

}  // namespace astmon
