#include "astmon/host.hpp"

#include <iostream>

namespace astmon {

SessionHost::SessionHost(std::shared_ptr<const TrainingPlan> plan, EngineOptions options,
                         std::unique_ptr<SessionWriter> writer)
    : engine_(plan, options), writer_(std::move(writer)) {
  memory_log_.plan = std::move(plan);
  memory_log_.meta.tolerance_bpm = options.tolerance_bpm;
}

void SessionHost::store_record(const IntervalRecord& record) {
  if (writer_) {
    if (!writer_->append_record(record)) {
      std::cerr << "astmon: storage alarm: " << writer_->alarm() << "\n";
    }
  } else {
    memory_log_.records.push_back(record);
  }
  const auto summary = session_summary();
  for (auto* sink : sinks_) sink->on_session(summary);
}

CommandOutcome SessionHost::command(CommandAction action) {
  CommandOutcome out = engine_.handle_command(action);
  if (out.record) store_record(*out.record);
  if (out.shutdown) finalize();
  return out;
}

std::optional<TelemetryFrame> SessionHost::tick(const SensorSample& sample) {
  auto out = engine_.tick(sample);
  if (!out) return std::nullopt;
  if (writer_) {
    const bool was_healthy = writer_->healthy();
    if (!writer_->append_frame(out->frame) && was_healthy) {
      std::cerr << "astmon: storage alarm: " << writer_->alarm() << "\n";
    }
  } else {
    memory_log_.frames.push_back(out->frame);
  }
  for (auto* sink : sinks_) sink->on_frame(out->frame);
  if (out->record) store_record(*out->record);
  if (finished() && !finalized_on_finish_) {
    finalized_on_finish_ = true;
    finalize();
  }
  return out->frame;
}

void SessionHost::finalize() {
  if (writer_) writer_->finalize();
}

nlohmann::json SessionHost::session_summary() const {
  return build_summary(writer_ ? writer_->log() : memory_log_);
}

}  // namespace astmon
