#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <variant>
#include <vector>

#include "astmon/ant.hpp"
#include "astmon/nmea.hpp"

namespace astmon {

/// One fused reading per engine tick. A field is absent when its sensor has
/// not reported within the staleness window.
struct SensorSample {
  std::int64_t timestamp_ms = 0;
  std::optional<int> hr_bpm;
  std::optional<GpsFix> fix;

  bool empty() const noexcept { return !hr_bpm && !fix; }
  bool operator==(const SensorSample&) const = default;
};

struct StalenessWindows {
  std::int64_t hr_ms = 5000;
  std::int64_t gps_ms = 3000;
};

using SensorEvent = std::variant<HeartRateReading, GpsFix>;

std::int64_t event_timestamp(const SensorEvent& event) noexcept;

/// Holds the newest heart-rate reading and the newest valid fix and
/// produces a sample on demand. Events may be offered in any order: only
/// those stamped at or before the tick time are applied, newest wins.
class SampleFuser {
 public:
  explicit SampleFuser(StalenessWindows windows = {}) : windows_(windows) {}

  void offer(const SensorEvent& event);
  SensorSample tick(std::int64_t now_ms);

  std::uint64_t invalid_fixes() const noexcept { return invalid_fixes_; }

 private:
  void apply(const SensorEvent& event);

  StalenessWindows windows_;
  std::vector<SensorEvent> pending_;
  std::optional<HeartRateReading> hr_;
  std::optional<GpsFix> fix_;
  std::uint64_t invalid_fixes_ = 0;
};

/// Multi-producer queue between sensor reader threads and the engine.
class SensorQueue {
 public:
  void push(SensorEvent event);
  std::vector<SensorEvent> drain();

 private:
  std::mutex mutex_;
  std::vector<SensorEvent> events_;
};

}  // namespace astmon
