#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include "astmon/plan.hpp"
#include "astmon/session.hpp"

namespace testsupport {

/// Fresh directory under /tmp, removed with its contents on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const noexcept { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::shared_ptr<const astmon::TrainingPlan> table1_plan();

/// Path of a file under tests/fixtures.
std::filesystem::path fixture(const std::string& name);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

// A scripted session: button presses interleaved with one-second ticks
// carrying an optional heart rate.
struct Press {
  astmon::CommandAction action;
};
struct Second {
  std::optional<int> hr;
};
using Step = std::variant<Press, Second>;
using Script = std::vector<Step>;

/// Straight-line interpreter of the training loop: the plan is walked
/// exercise by exercise, each second adds the heart rate to a sum and the
/// average is sum/count. Knows nothing about the engine's types beyond the
/// record it produces.
std::vector<astmon::IntervalRecord> reference_records(const astmon::TrainingPlan& plan,
                                                      const Script& script);

/// Feeds the script to a fresh engine and collects every record it emits.
std::vector<astmon::IntervalRecord> engine_records(std::shared_ptr<const astmon::TrainingPlan> plan,
                                                   const Script& script);

/// Records equal, averages within 1e-9 relative.
bool same_records(const std::vector<astmon::IntervalRecord>& a,
                  const std::vector<astmon::IntervalRecord>& b, std::string* why = nullptr);

astmon::TrainingPlan random_plan(std::mt19937_64& rng, int max_exercises = 6,
                                 int max_duration_s = 90);

/// Mostly sensible button presses with some noise, heart rate with drop-outs.
Script random_script(std::mt19937_64& rng, const astmon::TrainingPlan& plan);

/// Plays the script through a host writing into `dir`; returns the host's
/// records.
std::vector<astmon::IntervalRecord> record_session(std::shared_ptr<const astmon::TrainingPlan> plan,
                                                   const Script& script,
                                                   const std::filesystem::path& dir,
                                                   std::uint64_t gps_seed = 0);

/// Presses start_tracking, rides every exercise to completion at constant
/// heart rate (`hr_for(id)`), resting `rest_s` between them.
Script full_session_script(const astmon::TrainingPlan& plan, int rest_s,
                           int (*hr_for)(int target_hr));

/// Runs the astmon binary with `args`; returns exit code, fills stdout.
int run_cli(const std::vector<std::string>& args, std::string* out = nullptr,
            std::string* err = nullptr);

}  // namespace testsupport
