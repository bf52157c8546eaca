#pragma once

#include <cstdint>
#include <optional>

#include "astmon/nmea.hpp"

namespace astmon {

inline constexpr double kEarthRadiusM = 6371000.0;

/// Great-circle distance in meters between two points in degrees.
double haversine(double lat1, double lon1, double lat2, double lon2) noexcept;

struct MetricsConfig {
  /// Climb above the last local minimum needed before ascent is counted.
  double ascent_threshold_m = 1.0;
  /// Hops implying a faster ground speed are GPS glitches.
  double max_plausible_speed_mps = 30.0;

  bool operator==(const MetricsConfig&) const = default;
};

/// Session integrals shown in the cockpit's first segment.
struct RideTotals {
  double distance_m = 0.0;
  double ascent_m = 0.0;
  double current_speed_mps = 0.0;

  bool operator==(const RideTotals&) const = default;
};

/// Fold state for RideTotals over a chronologically ordered fix stream.
class RideMetrics {
 public:
  explicit RideMetrics(MetricsConfig config = {}) : config_(config) {}

  /// Incorporates one fix. Fixes must carry non-decreasing timestamps.
  void accumulate(const GpsFix& fix);

  /// Speed is unknown while no fix is available.
  void signal_lost() noexcept { totals_.current_speed_mps = 0.0; }

  const RideTotals& totals() const noexcept { return totals_; }
  std::uint64_t skipped_hops() const noexcept { return skipped_hops_; }

  bool operator==(const RideMetrics&) const = default;

 private:
  void accumulate_altitude(double altitude_m) noexcept;

  MetricsConfig config_;
  RideTotals totals_;
  std::optional<GpsFix> prev_;
  std::optional<double> ascent_base_m_;
  std::uint64_t skipped_hops_ = 0;
};

}  // namespace astmon
