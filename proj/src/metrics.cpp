#include "astmon/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace astmon {

double haversine(double lat1, double lon1, double lat2, double lon2) noexcept {
  constexpr double kRad = std::numbers::pi / 180.0;
  const double phi1 = lat1 * kRad;
  const double phi2 = lat2 * kRad;
  const double dphi = (lat2 - lat1) * kRad;
  const double dlambda = (lon2 - lon1) * kRad;
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double a = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  a = std::clamp(a, 0.0, 1.0);
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(a));
}

void RideMetrics::accumulate(const GpsFix& fix) {
  if (!prev_) {
    prev_ = fix;
    totals_.current_speed_mps = fix.speed_mps.value_or(0.0);
    if (fix.altitude_m) accumulate_altitude(*fix.altitude_m);
    return;
  }

  const double dt_s = static_cast<double>(fix.timestamp_ms - prev_->timestamp_ms) / 1000.0;
  const double hop = haversine(prev_->lat, prev_->lon, fix.lat, fix.lon);
  const bool implausible =
      dt_s > 0.0 ? hop / dt_s > config_.max_plausible_speed_mps : hop > 0.0;
  if (implausible) {
    // keep the last good anchor; the gap grows until the hop is plausible again
    ++skipped_hops_;
    if (fix.speed_mps) totals_.current_speed_mps = *fix.speed_mps;
    return;
  }

  totals_.distance_m += hop;
  if (fix.speed_mps) {
    totals_.current_speed_mps = *fix.speed_mps;
  } else if (dt_s > 0.0) {
    totals_.current_speed_mps = hop / dt_s;
  }
  if (fix.altitude_m) accumulate_altitude(*fix.altitude_m);
  prev_ = fix;
}

void RideMetrics::accumulate_altitude(double altitude_m) noexcept {
  if (!ascent_base_m_) {
    ascent_base_m_ = altitude_m;
    return;
  }
  if (altitude_m < *ascent_base_m_) {
    ascent_base_m_ = altitude_m;
  } else if (altitude_m - *ascent_base_m_ > config_.ascent_threshold_m) {
    totals_.ascent_m += altitude_m - *ascent_base_m_;
    ascent_base_m_ = altitude_m;
  }
}

}  // namespace astmon
