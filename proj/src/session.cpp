#include "astmon/session.hpp"

#include <cmath>
#include <stdexcept>

namespace astmon {

using nlohmann::json;

MeanUpdate update_mean(double mean, std::int64_t n, double hr) noexcept {
  const std::int64_t count = n + 1;
  return {mean + (hr - mean) / static_cast<double>(count), count};
}

FeedbackStatus classify(double avg_hr, double target_hr, double tolerance_bpm) noexcept {
  if (avg_hr < target_hr - tolerance_bpm) return {Feedback::kBelow, true};
  if (avg_hr > target_hr + tolerance_bpm) return {Feedback::kAbove, false};
  return {Feedback::kOnTrack, false};
}

json record_to_json(const IntervalRecord& r) {
  json j;
  j["exercise_id"] = r.exercise_id;
  j["target_hr"] = r.target_hr;
  j["duration_s"] = r.duration_s;
  j["elapsed_s"] = r.elapsed_s;
  j["completed"] = r.completed;
  j["samples_n"] = r.samples_n;
  j["achieved_avg_hr"] = r.achieved_avg_hr ? json(*r.achieved_avg_hr) : json(nullptr);
  j["deviation_bpm"] = r.deviation_bpm ? json(*r.deviation_bpm) : json(nullptr);
  j["distance_m"] = r.distance_m;
  return j;
}

IntervalRecord record_from_json(const json& j) {
  IntervalRecord r;
  r.exercise_id = j.at("exercise_id").get<int>();
  r.target_hr = j.at("target_hr").get<int>();
  r.duration_s = j.at("duration_s").get<int>();
  r.elapsed_s = j.at("elapsed_s").get<int>();
  r.completed = j.at("completed").get<bool>();
  r.samples_n = j.at("samples_n").get<std::int64_t>();
  if (!j.at("achieved_avg_hr").is_null()) r.achieved_avg_hr = j["achieved_avg_hr"].get<double>();
  if (!j.at("deviation_bpm").is_null()) r.deviation_bpm = j["deviation_bpm"].get<double>();
  r.distance_m = j.at("distance_m").get<double>();
  return r;
}

bool is_legal_transition(Phase from, Phase to) noexcept {
  switch (from) {
    case Phase::kIdle:
      return to == Phase::kTracking;
    case Phase::kTracking:
      return to == Phase::kIntervalActive || to == Phase::kIdle;
    case Phase::kIntervalActive:
      return to == Phase::kRest;
    case Phase::kRest:
      return to == Phase::kIntervalActive || to == Phase::kFinished || to == Phase::kIdle;
    case Phase::kFinished:
      return false;
  }
  return false;
}

SessionEngine::SessionEngine(std::shared_ptr<const TrainingPlan> plan, EngineOptions options)
    : plan_(std::move(plan)), options_(options), metrics_(options.metrics) {
  if (!plan_) throw std::invalid_argument("session engine needs a plan");
  if (!(options_.tolerance_bpm > 0.0)) {
    throw std::invalid_argument("tolerance_bpm must be positive");
  }
}

void SessionEngine::enter(Phase next) {
  transitions_.emplace_back(phase_, next);
  phase_ = next;
}

CommandOutcome SessionEngine::ignore() {
  ++ignored_;
  return {};
}

IntervalRecord SessionEngine::close_interval(bool completed) {
  const IntervalState& s = *interval_;
  IntervalRecord r;
  r.exercise_id = s.exercise_id;
  r.target_hr = s.target_hr;
  r.duration_s = s.duration_s;
  r.elapsed_s = s.elapsed_s;
  r.completed = completed;
  r.samples_n = s.n;
  if (s.n > 0) {
    r.achieved_avg_hr = s.avg_hr;
    r.deviation_bpm = s.avg_hr - s.target_hr;
  }
  r.distance_m = s.distance_m;
  records_.push_back(r);
  interval_.reset();
  enter(Phase::kRest);
  return r;
}

CommandOutcome SessionEngine::handle_command(CommandAction action) {
  if (shutdown_) return ignore();

  switch (action) {
    case CommandAction::kStartTracking:
      if (phase_ != Phase::kIdle) return ignore();
      enter(Phase::kTracking);
      return {true, std::nullopt, false};

    case CommandAction::kStopTracking:
      if (phase_ != Phase::kTracking && phase_ != Phase::kRest) return ignore();
      enter(Phase::kIdle);
      return {true, std::nullopt, false};

    case CommandAction::kStartInterval: {
      if (phase_ != Phase::kTracking && phase_ != Phase::kRest) return ignore();
      if (next_id_ > plan_->max_id()) return ignore();
      const Exercise& e = plan_->exercise(next_id_);
      ++next_id_;
      IntervalState s;
      s.exercise_id = e.id;
      s.target_hr = e.target_hr;
      s.duration_s = e.duration_s;
      interval_ = s;
      enter(Phase::kIntervalActive);
      return {true, std::nullopt, false};
    }

    case CommandAction::kStopInterval:
      if (phase_ != Phase::kIntervalActive) return ignore();
      return {true, close_interval(false), false};

    case CommandAction::kPoweroff: {
      CommandOutcome out{true, std::nullopt, true};
      if (phase_ == Phase::kIntervalActive) out.record = close_interval(false);
      shutdown_ = true;
      return out;
    }
  }
  return ignore();
}

std::optional<TickOutcome> SessionEngine::tick(const SensorSample& sample) {
  if (shutdown_ || phase_ == Phase::kIdle || phase_ == Phase::kFinished) return std::nullopt;

  ++t_s_;
  const double distance_before = metrics_.totals().distance_m;
  if (sample.fix) {
    // engine clock, not the receiver's, so a replay from the log is exact
    GpsFix fix = *sample.fix;
    fix.timestamp_ms = t_s_ * 1000;
    metrics_.accumulate(fix);
  } else {
    metrics_.signal_lost();
  }

  TickOutcome out;
  TelemetryFrame& f = out.frame;
  f.t_s = t_s_;
  f.phase = phase_;
  f.hr_bpm = sample.hr_bpm;
  if (sample.fix) {
    f.lat = sample.fix->lat;
    f.lon = sample.fix->lon;
    f.altitude_m = sample.fix->altitude_m;
  }
  const RideTotals& totals = metrics_.totals();
  f.distance_m = totals.distance_m;
  f.speed_mps = totals.current_speed_mps;
  f.ascent_m = totals.ascent_m;

  if (phase_ != Phase::kIntervalActive) return out;

  IntervalState& s = *interval_;
  ++s.elapsed_s;
  s.distance_m += totals.distance_m - distance_before;
  if (sample.hr_bpm) {
    const auto hr = static_cast<double>(*sample.hr_bpm);
    if (options_.mean_rule == MeanRule::kRunningMean) {
      const MeanUpdate m = update_mean(s.avg_hr, s.n, hr);
      s.avg_hr = m.mean;
      s.n = m.n;
    } else {
      s.avg_hr = update_mean(s.avg_hr, 0, hr).mean;
      ++s.n;
    }
  }

  f.interval_id = s.exercise_id;
  f.target_hr = s.target_hr;
  f.remaining_s = s.remaining_s();
  f.n = s.n;
  if (s.n > 0) {
    const FeedbackStatus status = classify(s.avg_hr, s.target_hr, options_.tolerance_bpm);
    f.avg_hr = s.avg_hr;
    f.feedback = status.level;
    f.alert = status.alert;
  }

  if (s.elapsed_s >= s.duration_s) {
    const bool last = s.exercise_id == plan_->max_id();
    out.record = close_interval(true);
    if (last) enter(Phase::kFinished);
  }
  return out;
}

}  // namespace astmon
