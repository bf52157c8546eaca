#include "astmon/replay.hpp"

#include <memory>

namespace astmon {

namespace {

using Action = CommandAction;

SensorSample sample_from_frame(const TelemetryFrame& frame) {
  SensorSample sample;
  sample.timestamp_ms = frame.t_s * 1000;
  sample.hr_bpm = frame.hr_bpm;
  if (frame.lat && frame.lon) {
    GpsFix fix;
    fix.timestamp_ms = sample.timestamp_ms;
    fix.lat = *frame.lat;
    fix.lon = *frame.lon;
    fix.altitude_m = frame.altitude_m;
    // Logged speed is the engine's current speed; fed back as the fix's own
    // speed it reproduces the same value.
    fix.speed_mps = frame.speed_mps;
    fix.valid = true;
    sample.fix = fix;
  }
  return sample;
}

/// Runs an interval with no ticks, which leaves only a record behind.
void skip_interval(SessionEngine& engine, std::vector<IntervalRecord>& records) {
  if (engine.phase() == Phase::kIdle) engine.handle_command(Action::kStartTracking);
  engine.handle_command(Action::kStartInterval);
  auto out = engine.handle_command(Action::kStopInterval);
  if (out.record) records.push_back(*out.record);
}

/// Issues the commands that put the engine into the state the row was
/// logged in. Returns false if no command sequence can reach it.
bool steer(SessionEngine& engine, const TelemetryFrame& row,
           std::vector<IntervalRecord>& records) {
  auto send = [&](Action a) {
    auto out = engine.handle_command(a);
    if (out.record) records.push_back(*out.record);
  };

  switch (row.phase) {
    case Phase::kIntervalActive: {
      if (!row.interval_id) return false;
      const int want = *row.interval_id;
      if (engine.phase() == Phase::kIntervalActive && engine.interval()->exercise_id == want) {
        return true;
      }
      if (engine.phase() == Phase::kIntervalActive) send(Action::kStopInterval);
      if (engine.phase() == Phase::kFinished) return false;
      while (engine.next_exercise_id() < want && engine.next_exercise_id() <= engine.plan().max_id()) {
        skip_interval(engine, records);
      }
      if (engine.next_exercise_id() != want) return false;
      if (engine.phase() == Phase::kIdle) send(Action::kStartTracking);
      send(Action::kStartInterval);
      return engine.phase() == Phase::kIntervalActive;
    }
    case Phase::kTracking:
      if (engine.phase() == Phase::kTracking) return true;
      if (engine.phase() == Phase::kIntervalActive) send(Action::kStopInterval);
      if (engine.phase() == Phase::kRest) send(Action::kStopTracking);
      if (engine.phase() == Phase::kIdle) send(Action::kStartTracking);
      return engine.phase() == Phase::kTracking;
    case Phase::kRest:
      if (engine.phase() == Phase::kRest) return true;
      if (engine.phase() == Phase::kIntervalActive) {
        send(Action::kStopInterval);
      } else if (engine.phase() != Phase::kFinished) {
        if (engine.next_exercise_id() > engine.plan().max_id()) return false;
        skip_interval(engine, records);
      }
      return engine.phase() == Phase::kRest;
    case Phase::kIdle:
    case Phase::kFinished:
      return false;  // never logged: the engine does not tick in these phases
  }
  return false;
}

std::string describe(const IntervalRecord& r) { return record_to_json(r).dump(); }

}  // namespace

ReplayReport replay_session(const std::filesystem::path& dir) {
  SessionLog log = load_session_header(dir);
  const std::vector<std::string> rows = read_sample_rows(dir);

  ReplayReport report;
  EngineOptions options;
  options.tolerance_bpm = log.meta.tolerance_bpm;
  SessionEngine engine(log.plan, options);
  std::vector<IntervalRecord>& records = report.records;

  for (std::size_t i = 0; i < rows.size(); ++i) {
    report.rows = i + 1;
    const std::string where = "samples.csv row " + std::to_string(i + 1);
    TelemetryFrame row;
    try {
      row = frame_from_csv_row(rows[i]);
    } catch (const StoreError& e) {
      report.divergence = where + ": " + e.what() + "\n  stored: " + rows[i];
      return report;
    }
    if (!steer(engine, row, records)) {
      report.divergence = where + ": phase " + std::string(to_string(row.phase)) +
                          " unreachable from " + std::string(to_string(engine.phase())) +
                          "\n  stored: " + rows[i];
      return report;
    }
    auto out = engine.tick(sample_from_frame(row));
    if (!out) {
      report.divergence = where + ": engine produced no frame\n  stored: " + rows[i];
      return report;
    }
    const std::string derived = frame_to_csv_row(out->frame);
    if (derived != rows[i]) {
      report.divergence = where + " differs\n  stored:  " + rows[i] + "\n  derived: " + derived;
      return report;
    }
    if (out->record) records.push_back(*out->record);
  }

  // A session powered off mid-interval closes it as partial.
  if (engine.phase() == Phase::kIntervalActive) {
    auto out = engine.handle_command(Action::kPoweroff);
    if (out.record) records.push_back(*out.record);
  }
  // Intervals stopped before their first tick leave no rows; accept them
  // from the log when they are the next exercises and carry no data.
  while (records.size() < log.records.size()) {
    const IntervalRecord& stored = log.records[records.size()];
    if (stored.elapsed_s != 0 || stored.samples_n != 0 ||
        stored.exercise_id != engine.next_exercise_id() || engine.phase() == Phase::kFinished ||
        engine.phase() == Phase::kIntervalActive) {
      break;
    }
    const std::size_t before = records.size();
    skip_interval(engine, records);
    if (records.size() == before) break;
  }

  const std::size_t common = std::min(records.size(), log.records.size());
  for (std::size_t k = 0; k < common; ++k) {
    if (!(records[k] == log.records[k])) {
      report.divergence = "intervals.json record " + std::to_string(k + 1) +
                          " differs\n  stored:  " + describe(log.records[k]) +
                          "\n  derived: " + describe(records[k]);
      return report;
    }
  }
  if (records.size() != log.records.size()) {
    report.divergence = "intervals.json has " + std::to_string(log.records.size()) +
                        " records, samples.csv derives " + std::to_string(records.size());
    return report;
  }
  report.identical = true;
  return report;
}

}  // namespace astmon
