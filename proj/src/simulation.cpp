#include "astmon/simulation.hpp"

#include <algorithm>
#include <optional>
#include <thread>

#include "astmon/ant.hpp"
#include "astmon/fusion.hpp"
#include "astmon/nmea.hpp"

namespace astmon {

namespace {

/// The rider's eyes on the cockpit.
class FrameWatcher final : public TelemetrySink {
 public:
  void on_frame(const TelemetryFrame& frame) override { latest = frame; }
  void on_session(const nlohmann::json&) override {}

  std::optional<TelemetryFrame> latest;
};

class SinkRegistration {
 public:
  SinkRegistration(SessionHost& host, TelemetrySink* sink) : host_(host), sink_(sink) {
    host_.add_sink(sink_);
  }
  ~SinkRegistration() { host_.remove_sink(sink_); }

 private:
  SessionHost& host_;
  TelemetrySink* sink_;
};

constexpr std::int64_t kHrOffsetMs = 200;
constexpr std::int64_t kGpsOffsetMs = 700;

}  // namespace

SimulationResult run_simulation(SessionHost& host, const SimulationConfig& config) {
  validate(config.rider);
  SimulationResult result;
  RiderModel rider = config.rider;
  Rng rng(rider.rng_seed);
  RouteFollower route(config.route);
  SensorStreamEmitter emitter;
  NmeaStreamDecoder nmea;
  AntStreamDecoder ant;
  SampleFuser fuser;
  FrameWatcher watcher;
  SinkRegistration registration(host, &watcher);
  const TrainingPlan& plan = host.engine().plan();

  host.command(CommandAction::kStartTracking);
  int resting_s = 0;
  auto next_tick = std::chrono::steady_clock::now();

  for (std::int64_t k = 1; k <= config.max_ticks && !host.shutdown_requested(); ++k) {
    const SessionEngine& engine = host.engine();
    if (engine.phase() == Phase::kFinished) break;
    const bool resting = engine.phase() == Phase::kTracking || engine.phase() == Phase::kRest;
    if (resting && resting_s >= config.rest_s && engine.next_exercise_id() <= plan.max_id()) {
      host.command(CommandAction::kStartInterval);
      resting_s = 0;
    }

    // the second (k-1, k]
    rider = step_hr(rider, 1.0, rng);
    const double speed = simulated_speed_mps(rider.effort);
    route.advance(speed);
    const std::int64_t start_ms = (k - 1) * 1000;
    const auto bytes = emitter.emit(start_ms + kGpsOffsetMs, route.position(), speed,
                                    emitted_bpm(rider));
    if (config.capture_streams) {
      result.nmea_stream += bytes.nmea;
      result.ant_stream.insert(result.ant_stream.end(), bytes.ant.begin(), bytes.ant.end());
    }
    for (const auto& r : ant.feed(bytes.ant, start_ms + kHrOffsetMs)) fuser.offer(r);
    for (const auto& f : nmea.feed(bytes.nmea, start_ms + kGpsOffsetMs)) fuser.offer(f);

    host.tick(fuser.tick(k * 1000));
    result.ticks = k;

    if (watcher.latest && watcher.latest->t_s == host.engine().session_seconds()) {
      const TelemetryFrame& frame = *watcher.latest;
      if (frame.phase == Phase::kIntervalActive) {
        const int reaction = std::max(1, config.policy.reaction_s);
        if (frame.feedback && frame.n % reaction == 0) {
          rider = apply_feedback(config.policy, rider, *frame.feedback);
        }
      } else {
        ++resting_s;
        const int next = host.engine().next_exercise_id();
        const double goal =
            next <= plan.max_id() ? plan.exercise(next).target_hr : rider.hr_rest;
        if (frame.hr_bpm) rider = prepare_for(config.policy, rider, goal, *frame.hr_bpm);
      }
    }

    if (config.tick_period.count() > 0) {
      next_tick += config.tick_period;
      std::this_thread::sleep_until(next_tick);
    }
  }

  if (!host.shutdown_requested()) host.command(CommandAction::kPoweroff);
  result.rider = rider;
  result.nmea_dropped = nmea.counters().dropped;
  result.ant_checksum_errors = ant.counters().checksum_errors;
  return result;
}

}  // namespace astmon
