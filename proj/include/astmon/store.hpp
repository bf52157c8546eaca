#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "astmon/plan.hpp"
#include "astmon/session.hpp"
#include "astmon/telemetry.hpp"
#include "json.hpp"

namespace astmon {

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::string_view kSamplesHeader =
    "t_s,phase,interval_id,hr_bpm,avg_hr,target_hr,remaining_s,feedback,lat,lon,altitude_m,"
    "speed_mps,distance_m,ascent_m";

inline constexpr const char* kPlanFile = "plan.json";
inline constexpr const char* kSamplesFile = "samples.csv";
inline constexpr const char* kIntervalsFile = "intervals.json";
inline constexpr const char* kSummaryFile = "summary.json";

/// Shortest text that parses back to the same double.
std::string format_number(double value);

std::string frame_to_csv_row(const TelemetryFrame& frame);
/// Inverse of frame_to_csv_row for the persisted columns; throws StoreError.
TelemetryFrame frame_from_csv_row(std::string_view row);

struct SessionMeta {
  std::string session_id;
  std::string started_at;
  double tolerance_bpm = 5.0;

  bool operator==(const SessionMeta&) const = default;
};

struct SessionLog {
  SessionMeta meta;
  std::shared_ptr<const TrainingPlan> plan;
  std::vector<TelemetryFrame> frames;
  std::vector<IntervalRecord> records;
};

/// Plan, metadata and records of a session directory; `frames` left empty.
SessionLog load_session_header(const std::filesystem::path& dir);

/// Data rows of samples.csv without line terminators. The header is
/// checked and a torn final row (no newline) is dropped.
std::vector<std::string> read_sample_rows(const std::filesystem::path& dir);

/// Reads a session directory. A torn final samples row (no newline) is
/// discarded; anything else malformed throws StoreError.
SessionLog load_session(const std::filesystem::path& dir);

/// Records split into completed and partial, plus session aggregates.
nlohmann::json build_summary(const SessionLog& log);
std::string summary_document(const SessionLog& log);

enum class Durability {
  kFlush,  // each append reaches the kernel before returning
  kSync,   // ...and is fdatasync'ed
};

/// Append-only writer for one session directory. Write failures never
/// throw: they raise an alarm and the session continues in memory.
class SessionWriter {
 public:
  /// Creates `dir` and writes plan.json, an empty samples.csv and
  /// intervals.json. Throws StoreError if the directory is unusable.
  SessionWriter(const std::filesystem::path& dir, std::shared_ptr<const TrainingPlan> plan,
                SessionMeta meta, Durability durability = Durability::kSync);
  ~SessionWriter();

  SessionWriter(const SessionWriter&) = delete;
  SessionWriter& operator=(const SessionWriter&) = delete;

  bool append_frame(const TelemetryFrame& frame) noexcept;
  /// Throws std::invalid_argument for an exercise id not in the plan.
  bool append_record(const IntervalRecord& record);
  /// Writes summary.json from everything appended so far.
  bool finalize() noexcept;

  bool healthy() const noexcept { return alarm_.empty(); }
  const std::string& alarm() const noexcept { return alarm_; }
  const SessionLog& log() const noexcept { return log_; }
  const std::filesystem::path& dir() const noexcept { return dir_; }

 private:
  bool write_intervals() noexcept;
  void raise(const std::string& what) noexcept;

  std::filesystem::path dir_;
  Durability durability_;
  int samples_fd_ = -1;
  SessionLog log_;
  std::string alarm_;
};

/// Writes `content` to `path` through a temporary file and rename.
void write_file_atomically(const std::filesystem::path& path, std::string_view content);

}  // namespace astmon
