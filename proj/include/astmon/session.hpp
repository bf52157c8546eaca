#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "astmon/fusion.hpp"
#include "astmon/metrics.hpp"
#include "astmon/plan.hpp"
#include "astmon/telemetry.hpp"
#include "json.hpp"

namespace astmon {

struct MeanUpdate {
  double mean = 0.0;
  std::int64_t n = 0;
};

/// Folds `hr` into a mean over `n` samples; the first sample uses divisor 1.
MeanUpdate update_mean(double mean, std::int64_t n, double hr) noexcept;

/// Below if avg < target - tol, Above if avg > target + tol, else OnTrack.
FeedbackStatus classify(double avg_hr, double target_hr, double tolerance_bpm) noexcept;

/// Progress through the exercise currently being ridden.
struct IntervalState {
  int exercise_id = 0;
  int target_hr = 0;
  int duration_s = 0;
  int elapsed_s = 0;
  std::int64_t n = 0;
  double avg_hr = 0.0;
  double distance_m = 0.0;

  int remaining_s() const noexcept { return duration_s - elapsed_s; }
};

/// Outcome of one interval, written when the timer expires or the rider
/// stops early. `achieved_avg_hr` is empty when no heart rate was received.
struct IntervalRecord {
  int exercise_id = 0;
  std::optional<double> achieved_avg_hr;
  int target_hr = 0;
  int elapsed_s = 0;
  int duration_s = 0;
  bool completed = false;
  std::int64_t samples_n = 0;
  std::optional<double> deviation_bpm;
  double distance_m = 0.0;

  bool operator==(const IntervalRecord&) const = default;
};

nlohmann::json record_to_json(const IntervalRecord& record);
IntervalRecord record_from_json(const nlohmann::json& j);

enum class MeanRule {
  kRunningMean,
  // n held at 1, a literal reading of the update; the "mean" is then the
  // last sample. Only for tests documenting the difference.
  kLastSampleOnly,
};

struct EngineOptions {
  double tolerance_bpm = 5.0;
  MeanRule mean_rule = MeanRule::kRunningMean;
  MetricsConfig metrics;
};

struct CommandOutcome {
  bool accepted = false;
  std::optional<IntervalRecord> record;  // partial record from an early stop
  bool shutdown = false;
};

struct TickOutcome {
  TelemetryFrame frame;
  std::optional<IntervalRecord> record;  // interval timer expired this tick
};

/// Drives a training plan: button commands move between phases, one tick
/// per second advances the interval timer and the running HR average.
/// Not thread-safe; owned by a single event loop.
class SessionEngine {
 public:
  explicit SessionEngine(std::shared_ptr<const TrainingPlan> plan, EngineOptions options = {});

  CommandOutcome handle_command(CommandAction action);

  /// Advances one second. No-op (empty result) while idle, finished, or
  /// after shutdown.
  std::optional<TickOutcome> tick(const SensorSample& sample);

  Phase phase() const noexcept { return phase_; }
  const std::optional<IntervalState>& interval() const noexcept { return interval_; }
  /// Exercise that the next start_interval loads; max_id + 1 when none left.
  int next_exercise_id() const noexcept { return next_id_; }
  std::int64_t session_seconds() const noexcept { return t_s_; }
  std::uint64_t ignored_commands() const noexcept { return ignored_; }
  bool shutdown_requested() const noexcept { return shutdown_; }

  const TrainingPlan& plan() const noexcept { return *plan_; }
  const EngineOptions& options() const noexcept { return options_; }
  const RideTotals& totals() const noexcept { return metrics_.totals(); }
  const std::vector<IntervalRecord>& records() const noexcept { return records_; }
  const std::vector<std::pair<Phase, Phase>>& transitions() const noexcept {
    return transitions_;
  }

 private:
  void enter(Phase next);
  CommandOutcome ignore();
  IntervalRecord close_interval(bool completed);

  std::shared_ptr<const TrainingPlan> plan_;
  EngineOptions options_;
  Phase phase_ = Phase::kIdle;
  std::optional<IntervalState> interval_;
  int next_id_ = 1;
  std::int64_t t_s_ = 0;
  std::uint64_t ignored_ = 0;
  bool shutdown_ = false;
  RideMetrics metrics_;
  std::vector<IntervalRecord> records_;
  std::vector<std::pair<Phase, Phase>> transitions_;
};

/// True for the phase changes the engine is allowed to make.
bool is_legal_transition(Phase from, Phase to) noexcept;

}  // namespace astmon
