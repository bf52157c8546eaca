#include "astmon/store.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace astmon {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::size_t kColumns = 14;

template <typename T>
void put_optional(std::string& row, const std::optional<T>& value) {
  if (value) {
    if constexpr (std::is_floating_point_v<T>) {
      row += format_number(*value);
    } else {
      row += std::to_string(*value);
    }
  }
}

std::vector<std::string_view> split_csv(std::string_view row) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = row.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(row.substr(start));
      return out;
    }
    out.push_back(row.substr(start, comma - start));
    start = comma + 1;
  }
}

template <typename T>
std::optional<T> parse_field(std::string_view field, const char* column) {
  if (field.empty()) return std::nullopt;
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw StoreError(std::string("bad value in column ") + column + ": " + std::string(field));
  }
  return value;
}

template <typename T>
T require_field(std::string_view field, const char* column) {
  auto v = parse_field<T>(field, column);
  if (!v) throw StoreError(std::string("missing value in column ") + column);
  return *v;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw StoreError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

bool write_all(int fd, std::string_view data) noexcept {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      return false;
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
  return true;
}

json intervals_document(const SessionLog& log) {
  json records = json::array();
  for (const auto& r : log.records) records.push_back(record_to_json(r));
  return json{{"session_id", log.meta.session_id},
              {"started_at", log.meta.started_at},
              {"tolerance_bpm", log.meta.tolerance_bpm},
              {"records", std::move(records)}};
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string frame_to_csv_row(const TelemetryFrame& f) {
  std::string row;
  row.reserve(128);
  row += std::to_string(f.t_s);
  row += ',';
  row += to_string(f.phase);
  row += ',';
  put_optional(row, f.interval_id);
  row += ',';
  put_optional(row, f.hr_bpm);
  row += ',';
  put_optional(row, f.avg_hr);
  row += ',';
  put_optional(row, f.target_hr);
  row += ',';
  put_optional(row, f.remaining_s);
  row += ',';
  if (f.feedback) row += symbol(*f.feedback);
  row += ',';
  put_optional(row, f.lat);
  row += ',';
  put_optional(row, f.lon);
  row += ',';
  put_optional(row, f.altitude_m);
  row += ',';
  row += format_number(f.speed_mps);
  row += ',';
  row += format_number(f.distance_m);
  row += ',';
  row += format_number(f.ascent_m);
  return row;
}

TelemetryFrame frame_from_csv_row(std::string_view row) {
  if (!row.empty() && row.back() == '\r') row.remove_suffix(1);
  const auto c = split_csv(row);
  if (c.size() != kColumns) {
    throw StoreError("expected " + std::to_string(kColumns) + " columns, got " +
                     std::to_string(c.size()));
  }
  TelemetryFrame f;
  f.t_s = require_field<std::int64_t>(c[0], "t_s");
  const auto phase = phase_from_string(c[1]);
  if (!phase) throw StoreError("unknown phase " + std::string(c[1]));
  f.phase = *phase;
  f.interval_id = parse_field<int>(c[2], "interval_id");
  f.hr_bpm = parse_field<int>(c[3], "hr_bpm");
  f.avg_hr = parse_field<double>(c[4], "avg_hr");
  f.target_hr = parse_field<int>(c[5], "target_hr");
  f.remaining_s = parse_field<int>(c[6], "remaining_s");
  if (!c[7].empty()) {
    f.feedback = feedback_from_symbol(c[7]);
    if (!f.feedback) throw StoreError("unknown feedback " + std::string(c[7]));
    f.alert = *f.feedback == Feedback::kBelow;
  }
  f.lat = parse_field<double>(c[8], "lat");
  f.lon = parse_field<double>(c[9], "lon");
  f.altitude_m = parse_field<double>(c[10], "altitude_m");
  f.speed_mps = require_field<double>(c[11], "speed_mps");
  f.distance_m = require_field<double>(c[12], "distance_m");
  f.ascent_m = require_field<double>(c[13], "ascent_m");
  return f;
}

SessionLog load_session_header(const fs::path& dir) {
  SessionLog log;
  try {
    log.plan = std::make_shared<const TrainingPlan>(parse_plan(read_file(dir / kPlanFile)));
  } catch (const PlanError& e) {
    throw StoreError(std::string("plan.json: ") + e.what());
  }

  try {
    const json intervals = json::parse(read_file(dir / kIntervalsFile));
    log.meta.session_id = intervals.at("session_id").get<std::string>();
    log.meta.started_at = intervals.at("started_at").get<std::string>();
    log.meta.tolerance_bpm = intervals.at("tolerance_bpm").get<double>();
    for (const auto& r : intervals.at("records")) {
      IntervalRecord record = record_from_json(r);
      if (record.exercise_id < 1 || record.exercise_id > log.plan->max_id()) {
        throw StoreError("intervals.json: record for unknown exercise " +
                         std::to_string(record.exercise_id));
      }
      log.records.push_back(record);
    }
  } catch (const json::exception& e) {
    throw StoreError(std::string("intervals.json: ") + e.what());
  }
  return log;
}

std::vector<std::string> read_sample_rows(const fs::path& dir) {
  const std::string samples = read_file(dir / kSamplesFile);
  std::vector<std::string> rows;
  std::string_view rest = samples;
  bool header = true;
  while (!rest.empty()) {
    const auto nl = rest.find('\n');
    if (nl == std::string_view::npos) break;  // torn final write
    std::string_view line = rest.substr(0, nl);
    rest.remove_prefix(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (header) {
      if (line != kSamplesHeader) throw StoreError("samples.csv: unexpected header");
      header = false;
      continue;
    }
    rows.emplace_back(line);
  }
  if (header) throw StoreError("samples.csv: missing header");
  return rows;
}

SessionLog load_session(const fs::path& dir) {
  SessionLog log = load_session_header(dir);
  const auto rows = read_sample_rows(dir);
  log.frames.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    try {
      log.frames.push_back(frame_from_csv_row(rows[i]));
    } catch (const StoreError& e) {
      throw StoreError("samples.csv row " + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return log;
}

json build_summary(const SessionLog& log) {
  json completed = json::array();
  json partial = json::array();
  double abs_sum = 0.0;
  int with_data = 0;
  std::int64_t interval_time = 0;
  for (const auto& r : log.records) {
    interval_time += r.elapsed_s;
    if (r.completed) {
      completed.push_back(record_to_json(r));
      if (r.deviation_bpm) {
        abs_sum += std::abs(*r.deviation_bpm);
        ++with_data;
      }
    } else {
      partial.push_back(record_to_json(r));
    }
  }

  json aggregates;
  aggregates["completed_intervals"] = completed.size();
  aggregates["partial_intervals"] = partial.size();
  aggregates["mean_abs_deviation_bpm"] =
      with_data > 0 ? json(abs_sum / with_data) : json(nullptr);
  aggregates["interval_time_s"] = interval_time;
  aggregates["session_time_s"] = log.frames.empty() ? 0 : log.frames.back().t_s;
  aggregates["distance_m"] = log.frames.empty() ? 0.0 : log.frames.back().distance_m;
  aggregates["ascent_m"] = log.frames.empty() ? 0.0 : log.frames.back().ascent_m;

  return json{{"session_id", log.meta.session_id},
              {"started_at", log.meta.started_at},
              {"plan_name", log.plan ? log.plan->name() : std::string()},
              {"tolerance_bpm", log.meta.tolerance_bpm},
              {"intervals", std::move(completed)},
              {"partial_intervals", std::move(partial)},
              {"aggregates", std::move(aggregates)}};
}

std::string summary_document(const SessionLog& log) { return build_summary(log).dump(2) + "\n"; }

void write_file_atomically(const fs::path& path, std::string_view content) {
  fs::path tmp = path;
  tmp += ".tmp";
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0644);
  if (fd < 0) throw StoreError("cannot write " + tmp.string() + ": " + std::strerror(errno));
  const bool ok = write_all(fd, content) && ::fsync(fd) == 0;
  ::close(fd);
  if (!ok) throw StoreError("cannot write " + tmp.string() + ": " + std::strerror(errno));
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw StoreError("cannot rename " + tmp.string() + ": " + ec.message());
}

SessionWriter::SessionWriter(const fs::path& dir, std::shared_ptr<const TrainingPlan> plan,
                             SessionMeta meta, Durability durability)
    : dir_(dir), durability_(durability) {
  if (!plan) throw std::invalid_argument("session writer needs a plan");
  log_.meta = std::move(meta);
  log_.plan = std::move(plan);

  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) throw StoreError("cannot create " + dir_.string() + ": " + ec.message());

  write_file_atomically(dir_ / kPlanFile, serialize_plan(*log_.plan));
  write_file_atomically(dir_ / kIntervalsFile, intervals_document(log_).dump(2) + "\n");

  const fs::path samples = dir_ / kSamplesFile;
  samples_fd_ = ::open(samples.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_APPEND | O_CLOEXEC, 0644);
  if (samples_fd_ < 0) {
    throw StoreError("cannot open " + samples.string() + ": " + std::strerror(errno));
  }
  std::string header(kSamplesHeader);
  header += '\n';
  if (!write_all(samples_fd_, header)) {
    throw StoreError("cannot write " + samples.string() + ": " + std::strerror(errno));
  }
}

SessionWriter::~SessionWriter() {
  if (samples_fd_ >= 0) ::close(samples_fd_);
}

void SessionWriter::raise(const std::string& what) noexcept {
  if (alarm_.empty()) alarm_ = what;
}

bool SessionWriter::append_frame(const TelemetryFrame& frame) noexcept {
  log_.frames.push_back(frame);
  std::string row = frame_to_csv_row(frame);
  row += '\n';
  // one write() per row, so a crash never leaves half a row behind us
  bool ok = write_all(samples_fd_, row);
  if (ok && durability_ == Durability::kSync) ok = ::fdatasync(samples_fd_) == 0;
  if (!ok) raise(std::string("samples.csv append failed: ") + std::strerror(errno));
  return ok;
}

bool SessionWriter::append_record(const IntervalRecord& record) {
  if (record.exercise_id < 1 || record.exercise_id > log_.plan->max_id()) {
    throw std::invalid_argument("record for unknown exercise " +
                                std::to_string(record.exercise_id));
  }
  log_.records.push_back(record);
  return write_intervals();
}

bool SessionWriter::write_intervals() noexcept {
  try {
    write_file_atomically(dir_ / kIntervalsFile, intervals_document(log_).dump(2) + "\n");
    return true;
  } catch (const std::exception& e) {
    raise(e.what());
    return false;
  }
}

bool SessionWriter::finalize() noexcept {
  try {
    write_file_atomically(dir_ / kSummaryFile, summary_document(log_));
    return true;
  } catch (const std::exception& e) {
    raise(e.what());
    return false;
  }
}

}  // namespace astmon
