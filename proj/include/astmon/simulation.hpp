#pragma once

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "astmon/host.hpp"
#include "astmon/simulator.hpp"

namespace astmon {

struct SimulationConfig {
  RiderModel rider;
  RiderPolicy policy;
  std::vector<Waypoint> route = default_route();
  /// Simulated rest before each interval, warm-up included.
  int rest_s = 60;
  std::int64_t max_ticks = 24 * 3600;
  /// Wall-clock time per simulated second; zero runs as fast as possible.
  std::chrono::milliseconds tick_period{0};
  bool capture_streams = false;
};

struct SimulationResult {
  std::int64_t ticks = 0;
  RiderModel rider;
  std::string nmea_stream;             // when capture_streams
  std::vector<std::uint8_t> ant_stream;  // when capture_streams
  std::uint64_t nmea_dropped = 0;
  std::uint64_t ant_checksum_errors = 0;
};

/// Rides the whole plan on a virtual clock. The rider's sensor bytes go
/// through the real decoders and fuser; the rider reacts to the frames the
/// host publishes, like a cyclist reading the cockpit. Presses
/// start_interval after `rest_s` seconds of rest and powers off once the
/// plan is finished.
SimulationResult run_simulation(SessionHost& host, const SimulationConfig& config);

}  // namespace astmon
