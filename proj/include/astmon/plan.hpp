#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace astmon {

inline constexpr int kMinTargetHr = 30;
inline constexpr int kMaxTargetHr = 230;

/// One prescribed intensity phase: hold `target_hr` on average for
/// `duration_s` seconds. `id` is the 1-based position in the plan.
struct Exercise {
  int id = 0;
  int target_hr = 0;
  int duration_s = 0;

  bool operator==(const Exercise&) const = default;
};

/// Raised for any plan document or plan invariant violation. `path()`
/// names the offending field, e.g. `exercises[2].target_hr`.
class PlanError : public std::runtime_error {
 public:
  PlanError(std::string path, const std::string& message)
      : std::runtime_error(path.empty() ? message : path + ": " + message),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// An ordered, validated, immutable list of exercises. Only intensity
/// phases are described; rest between them is left to the rider.
class TrainingPlan {
 public:
  TrainingPlan(std::string name, std::vector<Exercise> exercises);

  const std::string& name() const noexcept { return name_; }
  const std::vector<Exercise>& exercises() const noexcept { return exercises_; }
  int max_id() const noexcept { return static_cast<int>(exercises_.size()); }

  /// Exercise with 1-based `id`; throws std::out_of_range.
  const Exercise& exercise(int id) const;

  int total_duration_s() const noexcept;

  bool operator==(const TrainingPlan&) const = default;

 private:
  std::string name_;
  std::vector<Exercise> exercises_;
};

/// Whole seconds for a duration given in minutes, rounded half-up.
int minutes_to_seconds(double minutes);

TrainingPlan parse_plan(std::string_view document);
TrainingPlan plan_from_json(const nlohmann::json& document);
TrainingPlan load_plan(const std::filesystem::path& path);

nlohmann::json plan_to_json(const TrainingPlan& plan);
std::string serialize_plan(const TrainingPlan& plan);

}  // namespace astmon
