#include "support.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "astmon/host.hpp"
#include "astmon/store.hpp"

namespace fs = std::filesystem;
using namespace astmon;

namespace testsupport {

TempDir::TempDir() {
  std::string pattern = (fs::temp_directory_path() / "astmon-test-XXXXXX").string();
  if (!::mkdtemp(pattern.data())) throw std::runtime_error("mkdtemp failed");
  path_ = pattern;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::shared_ptr<const TrainingPlan> table1_plan() {
  return std::make_shared<const TrainingPlan>(load_plan(fs::path(ASTMON_SOURCE_DIR) / "plans/table1.json"));
}

fs::path fixture(const std::string& name) { return fs::path(ASTMON_SOURCE_DIR) / "tests/fixtures" / name; }

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

std::vector<IntervalRecord> reference_records(const TrainingPlan& plan, const Script& script) {
  enum { idle, tracking, active, rest, finished } phase = idle;
  bool off = false;
  std::size_t next = 0;  // index into exercises
  const Exercise* ex = nullptr;
  int elapsed = 0;
  long sum = 0;
  long count = 0;
  std::vector<IntervalRecord> out;

  auto close = [&](bool completed) {
    IntervalRecord r;
    r.exercise_id = ex->id;
    r.target_hr = ex->target_hr;
    r.duration_s = ex->duration_s;
    r.elapsed_s = elapsed;
    r.completed = completed;
    r.samples_n = count;
    if (count > 0) {
      r.achieved_avg_hr = double(sum) / double(count);
      r.deviation_bpm = *r.achieved_avg_hr - ex->target_hr;
    }
    out.push_back(r);
    phase = rest;
  };

  for (const Step& step : script) {
    if (off) break;
    if (const auto* p = std::get_if<Press>(&step)) {
      switch (p->action) {
        case CommandAction::kStartTracking:
          if (phase == idle) phase = tracking;
          break;
        case CommandAction::kStopTracking:
          if (phase == tracking || phase == rest) phase = idle;
          break;
        case CommandAction::kStartInterval:
          if ((phase == tracking || phase == rest) && next < plan.exercises().size()) {
            ex = &plan.exercises()[next++];
            elapsed = 0;
            sum = 0;
            count = 0;
            phase = active;
          }
          break;
        case CommandAction::kStopInterval:
          if (phase == active) close(false);
          break;
        case CommandAction::kPoweroff:
          if (phase == active) close(false);
          off = true;
          break;
      }
      continue;
    }
    const auto& s = std::get<Second>(step);
    if (phase != active) continue;
    ++elapsed;
    if (s.hr) {
      sum += *s.hr;
      ++count;
    }
    if (elapsed == ex->duration_s) {
      close(true);
      if (next == plan.exercises().size()) phase = finished;
    }
  }
  return out;
}

std::vector<IntervalRecord> engine_records(std::shared_ptr<const TrainingPlan> plan,
                                           const Script& script) {
  SessionEngine engine(std::move(plan));
  std::vector<IntervalRecord> out;
  for (const Step& step : script) {
    if (const auto* p = std::get_if<Press>(&step)) {
      auto r = engine.handle_command(p->action);
      if (r.record) out.push_back(*r.record);
    } else {
      SensorSample sample;
      sample.hr_bpm = std::get<Second>(step).hr;
      auto t = engine.tick(sample);
      if (t && t->record) out.push_back(*t->record);
    }
  }
  return out;
}

bool same_records(const std::vector<IntervalRecord>& a, const std::vector<IntervalRecord>& b,
                  std::string* why) {
  auto fail = [&](const std::string& m) {
    if (why) *why = m;
    return false;
  };
  if (a.size() != b.size()) {
    return fail("record count " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& x = a[i];
    const auto& y = b[i];
    const std::string at = "record " + std::to_string(i) + ": ";
    if (x.exercise_id != y.exercise_id || x.target_hr != y.target_hr ||
        x.duration_s != y.duration_s || x.elapsed_s != y.elapsed_s ||
        x.completed != y.completed || x.samples_n != y.samples_n) {
      return fail(at + record_to_json(x).dump() + " vs " + record_to_json(y).dump());
    }
    if (x.achieved_avg_hr.has_value() != y.achieved_avg_hr.has_value()) return fail(at + "avg presence");
    if (x.achieved_avg_hr) {
      const double tol = 1e-9 * std::max(1.0, std::abs(*y.achieved_avg_hr));
      if (std::abs(*x.achieved_avg_hr - *y.achieved_avg_hr) > tol) return fail(at + "avg value");
      if (std::abs(*x.deviation_bpm - *y.deviation_bpm) > tol) return fail(at + "deviation");
    }
  }
  return true;
}

TrainingPlan random_plan(std::mt19937_64& rng, int max_exercises, int max_duration_s) {
  std::uniform_int_distribution<int> count(1, max_exercises);
  std::uniform_int_distribution<int> target(30, 230);
  std::uniform_int_distribution<int> duration(1, max_duration_s);
  std::vector<Exercise> ex;
  const int n = count(rng);
  for (int i = 1; i <= n; ++i) ex.push_back({i, target(rng), duration(rng)});
  return TrainingPlan("random plan", ex);
}

Script random_script(std::mt19937_64& rng, const TrainingPlan& plan) {
  Script script;
  std::uniform_int_distribution<int> percent(0, 99);
  std::uniform_int_distribution<int> action(0, 4);
  std::normal_distribution<double> wobble(0.0, 8.0);
  script.push_back(Press{CommandAction::kStartTracking});
  int hr = 60 + percent(rng);
  const int total = static_cast<int>(plan.total_duration_s()) * 2 + 60;
  for (int i = 0; i < total; ++i) {
    const int roll = percent(rng);
    if (roll < 4) {
      script.push_back(Press{CommandAction::kStartInterval});
    } else if (roll < 5) {
      script.push_back(Press{static_cast<CommandAction>(action(rng) % 4)});
    }
    hr = std::clamp(hr + static_cast<int>(std::lround(wobble(rng))), 40, 220);
    if (percent(rng) < 10) {
      script.push_back(Second{std::nullopt});  // strap drop-out
    } else {
      script.push_back(Second{hr});
    }
  }
  if (percent(rng) < 50) script.push_back(Press{CommandAction::kPoweroff});
  return script;
}

std::vector<IntervalRecord> record_session(std::shared_ptr<const TrainingPlan> plan,
                                           const Script& script, const fs::path& dir,
                                           std::uint64_t gps_seed) {
  SessionMeta meta{"test-" + std::to_string(gps_seed), "1970-01-01T00:00:00Z", 5.0};
  auto writer = std::make_unique<SessionWriter>(dir, plan, meta, Durability::kFlush);
  SessionHost host(plan, EngineOptions{}, std::move(writer));
  std::mt19937_64 rng(gps_seed);
  std::normal_distribution<double> step(0.0, 0.00005);
  std::normal_distribution<double> climb(0.0, 0.8);
  std::uniform_int_distribution<int> percent(0, 99);
  double lat = 46.05, lon = 14.5, alt = 300.0;
  std::vector<IntervalRecord> out;
  std::int64_t t = 0;
  for (const Step& s : script) {
    if (const auto* p = std::get_if<Press>(&s)) {
      auto r = host.command(p->action);
      if (r.record) out.push_back(*r.record);
      continue;
    }
    ++t;
    SensorSample sample;
    sample.timestamp_ms = t * 1000;
    sample.hr_bpm = std::get<Second>(s).hr;
    if (gps_seed != 0 && percent(rng) < 90) {
      lat += step(rng);
      lon += step(rng);
      alt += climb(rng);
      GpsFix fix;
      fix.timestamp_ms = t * 1000;
      fix.lat = lat;
      fix.lon = lon;
      fix.altitude_m = alt;
      if (percent(rng) < 50) fix.speed_mps = std::abs(step(rng)) * 1e5;
      fix.valid = true;
      sample.fix = fix;
    }
    if (host.shutdown_requested()) break;
    const std::size_t before = host.engine().records().size();
    host.tick(sample);
    if (host.engine().records().size() > before) out.push_back(host.engine().records().back());
  }
  host.finalize();
  return out;
}

Script full_session_script(const TrainingPlan& plan, int rest_s, int (*hr_for)(int)) {
  Script script;
  script.push_back(Press{CommandAction::kStartTracking});
  for (const Exercise& e : plan.exercises()) {
    for (int i = 0; i < rest_s; ++i) script.push_back(Second{e.target_hr - 10});
    script.push_back(Press{CommandAction::kStartInterval});
    for (int i = 0; i < e.duration_s; ++i) script.push_back(Second{hr_for(e.target_hr)});
  }
  return script;
}

int run_cli(const std::vector<std::string>& args, std::string* out, std::string* err) {
  TempDir io;
  std::string cmd = "'" ASTMON_BINARY "'";
  for (const auto& a : args) {
    std::string quoted = "'";
    for (char c : a) quoted += c == '\'' ? std::string("'\\''") : std::string(1, c);
    cmd += " " + quoted + "'";
  }
  cmd += " >'" + (io / "out").string() + "' 2>'" + (io / "err").string() + "'";
  const int status = std::system(cmd.c_str());
  if (out) *out = read_file(io / "out");
  if (err) *err = read_file(io / "err");
  if (status == -1 || !WIFEXITED(status)) return -1;
  return WEXITSTATUS(status);
}

}  // namespace testsupport
