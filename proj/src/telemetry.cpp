#include "astmon/telemetry.hpp"

#include <array>
#include <utility>

namespace astmon {

namespace {

using nlohmann::json;

constexpr std::array<std::pair<Phase, std::string_view>, 5> kPhaseNames{{
    {Phase::kIdle, "idle"},
    {Phase::kTracking, "tracking"},
    {Phase::kIntervalActive, "interval_active"},
    {Phase::kRest, "rest"},
    {Phase::kFinished, "finished"},
}};

constexpr std::array<std::pair<CommandAction, std::string_view>, 5> kActionNames{{
    {CommandAction::kStartTracking, "start_tracking"},
    {CommandAction::kStopTracking, "stop_tracking"},
    {CommandAction::kStartInterval, "start_interval"},
    {CommandAction::kStopInterval, "stop_interval"},
    {CommandAction::kPoweroff, "poweroff"},
}};

template <typename T>
json optional_json(const std::optional<T>& value) {
  return value ? json(*value) : json(nullptr);
}

}  // namespace

std::string_view to_string(Phase phase) noexcept {
  for (const auto& [p, name] : kPhaseNames) {
    if (p == phase) return name;
  }
  return "unknown";
}

std::optional<Phase> phase_from_string(std::string_view name) noexcept {
  for (const auto& [p, n] : kPhaseNames) {
    if (n == name) return p;
  }
  return std::nullopt;
}

std::string_view to_string(CommandAction action) noexcept {
  for (const auto& [a, name] : kActionNames) {
    if (a == action) return name;
  }
  return "unknown";
}

std::optional<CommandAction> action_from_string(std::string_view name) noexcept {
  for (const auto& [a, n] : kActionNames) {
    if (n == name) return a;
  }
  return std::nullopt;
}

std::string_view symbol(Feedback feedback) noexcept {
  switch (feedback) {
    case Feedback::kBelow:
      return "-";
    case Feedback::kOnTrack:
      return "=";
    case Feedback::kAbove:
      return "+";
  }
  return "?";
}

std::optional<Feedback> feedback_from_symbol(std::string_view s) noexcept {
  if (s == "-") return Feedback::kBelow;
  if (s == "=") return Feedback::kOnTrack;
  if (s == "+") return Feedback::kAbove;
  return std::nullopt;
}

json frame_to_json(const TelemetryFrame& frame) {
  json j;
  j["type"] = "telemetry";
  j["t_s"] = frame.t_s;
  j["phase"] = to_string(frame.phase);
  j["interval_id"] = optional_json(frame.interval_id);
  j["hr_bpm"] = optional_json(frame.hr_bpm);
  j["avg_hr"] = optional_json(frame.avg_hr);
  j["target_hr"] = optional_json(frame.target_hr);
  j["remaining_s"] = optional_json(frame.remaining_s);
  j["feedback"] = frame.feedback ? json(symbol(*frame.feedback)) : json(nullptr);
  j["alert"] = frame.alert;
  j["distance_m"] = frame.distance_m;
  j["speed_mps"] = frame.speed_mps;
  j["ascent_m"] = frame.ascent_m;
  j["n"] = frame.n;
  j["lat"] = optional_json(frame.lat);
  j["lon"] = optional_json(frame.lon);
  j["altitude_m"] = optional_json(frame.altitude_m);
  return j;
}

std::variant<Command, std::string> parse_command_message(std::string_view message) {
  const json parsed = json::parse(message.begin(), message.end(), nullptr, false);
  if (parsed.is_discarded()) return std::string("malformed JSON");
  if (!parsed.is_object()) return std::string("message must be a JSON object");
  const auto type = parsed.find("type");
  if (type == parsed.end() || !type->is_string()) return std::string("missing message type");
  if (type->get<std::string>() != "command") {
    return "unsupported message type \"" + type->get<std::string>() + "\"";
  }
  const auto action = parsed.find("action");
  if (action == parsed.end() || !action->is_string()) return std::string("missing action");
  const auto name = action->get<std::string>();
  const auto decoded = action_from_string(name);
  if (!decoded) return "unknown action \"" + name + "\"";
  return Command{*decoded};
}

std::string command_message(CommandAction action) {
  return json{{"type", "command"}, {"action", to_string(action)}}.dump();
}

}  // namespace astmon
