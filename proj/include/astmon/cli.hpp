#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>

#include "astmon/simulator.hpp"
#include "json.hpp"

namespace astmon::cli {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kSensorError = 2,
  kReplayMismatch = 3,
};

enum class HrFormat { kAnt, kPlain };

struct RunConfig {
  std::filesystem::path plan_path;
  std::filesystem::path output_dir;  // empty: sessions/<session id>
  std::filesystem::path gps_source;  // empty: no GPS
  std::filesystem::path hr_source;   // empty: no heart-rate strap
  HrFormat hr_format = HrFormat::kAnt;
  double tolerance_bpm = 5.0;
  std::string host = "127.0.0.1";
  unsigned short port = 8765;
  std::optional<std::uint64_t> seed;
  /// Wall-clock length of one engine second; shortened in tests.
  int tick_ms = 1000;
  std::filesystem::path www_dir;
};

struct SimulateConfig {
  std::filesystem::path plan_path;
  std::filesystem::path output_dir;  // empty: sessions/sim-<seed>
  double tolerance_bpm = 5.0;
  std::uint64_t seed = 42;
  int rest_s = 60;
  RiderModel rider;
  RiderPolicy policy;
  std::filesystem::path route_path;  // empty: built-in loop
  /// Serve the simulated session on this port while it runs.
  std::optional<unsigned short> port;
  std::string host = "127.0.0.1";
  int tick_ms = 0;
};

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);
int cmd_simulate(const SimulateConfig& config, std::ostream& out, std::ostream& err);
int cmd_replay(const std::filesystem::path& session_dir, std::ostream& out, std::ostream& err);
int cmd_analyze(const std::filesystem::path& session_dir, std::ostream& out, std::ostream& err);

/// Per-interval target vs achieved table from a summary document.
std::string format_report(const nlohmann::json& summary);

/// Parses arguments and dispatches to a subcommand.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace astmon::cli
