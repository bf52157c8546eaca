#include "astmon/plan.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace astmon {

namespace {

using nlohmann::json;

std::string exercise_path(std::size_t index, std::string_view field = {}) {
  std::string path = "exercises[" + std::to_string(index) + "]";
  if (!field.empty()) {
    path += ".";
    path += field;
  }
  return path;
}

void check_exercise(const Exercise& e, std::size_t index) {
  if (e.target_hr < kMinTargetHr || e.target_hr > kMaxTargetHr) {
    throw PlanError(exercise_path(index, "target_hr"),
                    "target_hr " + std::to_string(e.target_hr) + " outside [" +
                        std::to_string(kMinTargetHr) + ", " +
                        std::to_string(kMaxTargetHr) + "]");
  }
  if (e.duration_s < 1) {
    throw PlanError(exercise_path(index, "duration_min"),
                    "duration must be at least one second");
  }
}

void check_ids(const std::vector<Exercise>& exercises) {
  std::set<int> seen;
  for (std::size_t i = 0; i < exercises.size(); ++i) {
    const int id = exercises[i].id;
    if (id < 1) {
      throw PlanError(exercise_path(i, "id"), "id must be positive");
    }
    if (!seen.insert(id).second) {
      throw PlanError(exercise_path(i, "id"),
                      "duplicate id " + std::to_string(id));
    }
  }
  // ids are distinct and positive; any value above n means a hole below it
  const int n = static_cast<int>(exercises.size());
  if (*seen.rbegin() != n) {
    throw PlanError("exercises", "gapped ids");
  }
  for (std::size_t i = 0; i < exercises.size(); ++i) {
    if (exercises[i].id != static_cast<int>(i) + 1) {
      throw PlanError(exercise_path(i, "id"),
                      "id " + std::to_string(exercises[i].id) +
                          " does not match position " + std::to_string(i + 1));
    }
  }
}

void reject_unknown_fields(const json& object, std::initializer_list<const char*> allowed,
                           const std::string& prefix) {
  for (const auto& [key, value] : object.items()) {
    bool known = false;
    for (const char* name : allowed) {
      if (key == name) {
        known = true;
        break;
      }
    }
    if (!known) {
      throw PlanError(prefix.empty() ? key : prefix + "." + key, "unknown field");
    }
  }
}

const json& require(const json& object, const char* field, const std::string& prefix) {
  auto it = object.find(field);
  if (it == object.end()) {
    throw PlanError(prefix.empty() ? field : prefix + "." + field, "missing field");
  }
  return *it;
}

int require_int(const json& value, const std::string& path) {
  if (!value.is_number_integer()) {
    throw PlanError(path, "expected an integer");
  }
  if (value.is_number_unsigned()) {
    const auto v = value.get<std::uint64_t>();
    if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
      throw PlanError(path, "integer out of range");
    }
    return static_cast<int>(v);
  }
  const auto v = value.get<std::int64_t>();
  if (v > std::numeric_limits<int>::max() || v < std::numeric_limits<int>::min()) {
    throw PlanError(path, "integer out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

TrainingPlan::TrainingPlan(std::string name, std::vector<Exercise> exercises)
    : name_(std::move(name)), exercises_(std::move(exercises)) {
  if (exercises_.empty()) {
    throw PlanError("exercises", "plan must contain at least one exercise");
  }
  for (std::size_t i = 0; i < exercises_.size(); ++i) {
    check_exercise(exercises_[i], i);
  }
  check_ids(exercises_);
}

const Exercise& TrainingPlan::exercise(int id) const {
  if (id < 1 || id > max_id()) {
    throw std::out_of_range("no exercise with id " + std::to_string(id));
  }
  return exercises_[static_cast<std::size_t>(id - 1)];
}

int TrainingPlan::total_duration_s() const noexcept {
  int total = 0;
  for (const auto& e : exercises_) total += e.duration_s;
  return total;
}

int minutes_to_seconds(double minutes) {
  return static_cast<int>(std::floor(minutes * 60.0 + 0.5));
}

TrainingPlan plan_from_json(const json& document) {
  if (!document.is_object()) {
    throw PlanError("", "plan document must be a JSON object");
  }
  reject_unknown_fields(document, {"name", "exercises"}, "");

  const json& name = require(document, "name", "");
  if (!name.is_string()) {
    throw PlanError("name", "expected a string");
  }
  const json& list = require(document, "exercises", "");
  if (!list.is_array()) {
    throw PlanError("exercises", "expected an array");
  }

  std::vector<Exercise> exercises;
  exercises.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& item = list[i];
    const std::string prefix = exercise_path(i);
    if (!item.is_object()) {
      throw PlanError(prefix, "expected an object");
    }
    reject_unknown_fields(item, {"id", "target_hr", "duration_min"}, prefix);

    Exercise e;
    e.id = require_int(require(item, "id", prefix), prefix + ".id");
    e.target_hr = require_int(require(item, "target_hr", prefix), prefix + ".target_hr");

    const json& minutes = require(item, "duration_min", prefix);
    if (!minutes.is_number()) {
      throw PlanError(prefix + ".duration_min", "expected a number");
    }
    const double value = minutes.get<double>();
    if (!(value > 0.0)) {
      throw PlanError(prefix + ".duration_min", "duration must be positive");
    }
    if (value * 60.0 >= static_cast<double>(std::numeric_limits<int>::max())) {
      throw PlanError(prefix + ".duration_min", "duration out of range");
    }
    e.duration_s = minutes_to_seconds(value);
    exercises.push_back(e);
  }
  return TrainingPlan(name.get<std::string>(), std::move(exercises));
}

TrainingPlan parse_plan(std::string_view document) {
  json parsed;
  try {
    parsed = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw PlanError("", std::string("malformed document: ") + e.what());
  }
  return plan_from_json(parsed);
}

TrainingPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw PlanError("", "cannot open plan file " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_plan(buffer.str());
}

json plan_to_json(const TrainingPlan& plan) {
  json list = json::array();
  for (const auto& e : plan.exercises()) {
    json item;
    item["id"] = e.id;
    item["target_hr"] = e.target_hr;
    if (e.duration_s % 60 == 0) {
      item["duration_min"] = e.duration_s / 60;
    } else {
      item["duration_min"] = static_cast<double>(e.duration_s) / 60.0;
    }
    list.push_back(std::move(item));
  }
  return json{{"name", plan.name()}, {"exercises", std::move(list)}};
}

std::string serialize_plan(const TrainingPlan& plan) {
  return plan_to_json(plan).dump(2) + "\n";
}

}  // namespace astmon
