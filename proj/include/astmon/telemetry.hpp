#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

namespace astmon {

enum class Phase { kIdle, kTracking, kIntervalActive, kRest, kFinished };

std::string_view to_string(Phase phase) noexcept;
std::optional<Phase> phase_from_string(std::string_view name) noexcept;

/// The cockpit's buttons.
enum class CommandAction { kStartTracking, kStopTracking, kStartInterval, kStopInterval, kPoweroff };

std::string_view to_string(CommandAction action) noexcept;
std::optional<CommandAction> action_from_string(std::string_view name) noexcept;

/// Running average against target: "-" below, "=" on track, "+" above.
enum class Feedback { kBelow, kOnTrack, kAbove };

std::string_view symbol(Feedback feedback) noexcept;
std::optional<Feedback> feedback_from_symbol(std::string_view symbol) noexcept;

struct FeedbackStatus {
  Feedback level = Feedback::kOnTrack;
  bool alert = false;  // red highlight, set exactly when below plan

  bool operator==(const FeedbackStatus&) const = default;
};

/// Per-second snapshot sent to the cockpit and written to samples.csv.
/// Interval fields are populated only while an interval is running.
struct TelemetryFrame {
  std::int64_t t_s = 0;
  Phase phase = Phase::kIdle;
  std::optional<int> interval_id;
  std::optional<int> hr_bpm;
  std::optional<double> avg_hr;
  std::optional<int> target_hr;
  std::optional<int> remaining_s;
  std::optional<Feedback> feedback;
  bool alert = false;
  double distance_m = 0.0;
  double speed_mps = 0.0;
  double ascent_m = 0.0;
  std::int64_t n = 0;
  // position of the fix used this tick, if any
  std::optional<double> lat;
  std::optional<double> lon;
  std::optional<double> altitude_m;

  bool operator==(const TelemetryFrame&) const = default;
};

struct Command {
  CommandAction action;
  bool operator==(const Command&) const = default;
};

/// `{"type":"telemetry", ...}`; absent fields are null.
nlohmann::json frame_to_json(const TelemetryFrame& frame);

/// Parses one `{"type":"command","action":...}` message. Returns the
/// rejection reason on failure.
std::variant<Command, std::string> parse_command_message(std::string_view message);

std::string command_message(CommandAction action);

}  // namespace astmon
