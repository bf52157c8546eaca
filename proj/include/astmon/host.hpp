#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "astmon/session.hpp"
#include "astmon/store.hpp"
#include "astmon/telemetry.hpp"
#include "json.hpp"

namespace astmon {

/// Receives immutable snapshots from the engine thread. Implementations
/// must not block.
class TelemetrySink {
 public:
  virtual ~TelemetrySink() = default;
  virtual void on_frame(const TelemetryFrame& frame) = 0;
  /// Summary of the session so far, published after each interval record.
  virtual void on_session(const nlohmann::json& summary) = 0;
};

/// The engine thread's side of a session: applies commands and ticks to the
/// engine, persists frames and records, and fans snapshots out to sinks.
class SessionHost {
 public:
  SessionHost(std::shared_ptr<const TrainingPlan> plan, EngineOptions options,
              std::unique_ptr<SessionWriter> writer);

  void add_sink(TelemetrySink* sink) { sinks_.push_back(sink); }
  void remove_sink(TelemetrySink* sink) { std::erase(sinks_, sink); }

  /// Applies a command. Poweroff flushes and finalizes the store.
  CommandOutcome command(CommandAction action);

  /// One engine second. Returns the frame when the engine was ticking.
  std::optional<TelemetryFrame> tick(const SensorSample& sample);

  /// Writes summary.json from what has been stored so far.
  void finalize();

  nlohmann::json session_summary() const;

  const SessionEngine& engine() const noexcept { return engine_; }
  SessionWriter* writer() const noexcept { return writer_.get(); }
  bool finished() const noexcept { return engine_.phase() == Phase::kFinished; }
  bool shutdown_requested() const noexcept { return engine_.shutdown_requested(); }

 private:
  void store_record(const IntervalRecord& record);

  SessionEngine engine_;
  std::unique_ptr<SessionWriter> writer_;
  std::vector<TelemetrySink*> sinks_;
  SessionLog memory_log_;  // used when running without a writer
  bool finalized_on_finish_ = false;
};

}  // namespace astmon
