#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "astmon/telemetry.hpp"

namespace astmon {

/// First-order heart-rate response to effort.
struct RiderModel {
  double hr_rest = 60.0;
  double hr_max = 195.0;
  double tau_s = 30.0;
  double effort = 0.0;  // in [0, 1]
  double hr = 60.0;
  double noise_sd = 1.5;
  std::uint64_t rng_seed = 42;

  /// Heart rate the model settles at for the current effort.
  double steady_state_hr() const noexcept { return hr_rest + effort * (hr_max - hr_rest); }
  /// Effort whose steady state is `hr`, clamped to [0, 1].
  double effort_for(double hr) const noexcept;
};

/// Throws std::invalid_argument unless hr_rest < hr_max, tau_s > 0 and
/// effort is within [0, 1].
void validate(const RiderModel& model);

/// How the simulated rider reacts to what the cockpit shows.
struct RiderPolicy {
  /// Effort step per feedback tick: + on "-", none on "=", - on "+".
  double gain = 0.05;
  /// Proportional gain used between intervals to bring heart rate to the
  /// next target: effort = effort_for(target) + k * (target - hr) / range.
  double recovery_gain = 3.0;
  /// Seconds between reactions to interval feedback; a rider does not
  /// re-adjust before the last adjustment had time to show.
  int reaction_s = 10;
};

using Rng = std::mt19937_64;

/// Advances the model by `dt_s` seconds: relaxes hr toward the steady
/// state with time constant tau and adds gaussian noise (sd * sqrt(dt)).
RiderModel step_hr(const RiderModel& model, double dt_s, Rng& rng);

/// Heart rate as the strap would report it: rounded, clamped to [30, 230].
int emitted_bpm(const RiderModel& model) noexcept;

RiderModel apply_feedback(const RiderPolicy& policy, const RiderModel& model,
                          Feedback feedback) noexcept;

/// Between intervals: steer effort so heart rate reaches `target_hr`.
RiderModel prepare_for(const RiderPolicy& policy, const RiderModel& model, double target_hr,
                       double current_hr) noexcept;

struct Waypoint {
  double lat = 0.0;
  double lon = 0.0;
  double altitude_m = 0.0;

  bool operator==(const Waypoint&) const = default;
};

/// Route file: JSON array of {lat, lon, altitude_m}. Throws
/// std::runtime_error on a malformed or empty list.
std::vector<Waypoint> load_route(const std::filesystem::path& path);
std::vector<Waypoint> parse_route(std::string_view document);

/// A small hilly loop used when no route file is given.
std::vector<Waypoint> default_route();

/// Moves along a closed polyline (last waypoint joins the first).
class RouteFollower {
 public:
  explicit RouteFollower(std::vector<Waypoint> route);

  void advance(double meters);
  Waypoint position() const;
  double travelled_m() const noexcept { return travelled_; }

 private:
  std::vector<Waypoint> route_;
  std::vector<double> segment_m_;
  std::size_t segment_ = 0;
  double offset_m_ = 0.0;
  double travelled_ = 0.0;
};

/// Ground speed for an effort level: 2 + 10 * effort m/s.
double simulated_speed_mps(double effort) noexcept;

std::string format_gga(std::int64_t utc_ms, double lat, double lon, double altitude_m);
std::string format_rmc(std::int64_t utc_ms, double lat, double lon, double speed_mps);

/// Produces the bytes a GPS receiver and an ANT stick would deliver.
class SensorStreamEmitter {
 public:
  struct Tick {
    std::string nmea;              // one GGA and one RMC sentence, CRLF terminated
    std::vector<std::uint8_t> ant;  // one broadcast-data message
  };

  Tick emit(std::int64_t t_ms, const Waypoint& position, double speed_mps, int bpm);

 private:
  std::uint8_t beat_count_ = 0;
  std::uint16_t beat_time_ = 0;  // 1/1024 s
  double beat_phase_s_ = 0.0;
  std::int64_t last_ms_ = 0;
};

}  // namespace astmon
