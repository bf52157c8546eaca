#include "astmon/cli.hpp"

#include <fcntl.h>
#include <poll.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstring>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "astmon/ant.hpp"
#include "astmon/fusion.hpp"
#include "astmon/gateway.hpp"
#include "astmon/host.hpp"
#include "astmon/nmea.hpp"
#include "astmon/plan.hpp"
#include "astmon/replay.hpp"
#include "astmon/simulation.hpp"
#include "astmon/store.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace astmon::cli {

namespace {

std::atomic<bool> g_stop{false};

extern "C" void on_signal(int) { g_stop.store(true); }

class SignalGuard {
 public:
  SignalGuard() {
    g_stop.store(false);
    struct sigaction sa {};
    sa.sa_handler = on_signal;
    sigemptyset(&sa.sa_mask);
    ::sigaction(SIGINT, &sa, &old_int_);
    ::sigaction(SIGTERM, &sa, &old_term_);
    // a vanished reader must not kill the session; writes report EPIPE
    struct sigaction ignore {};
    ignore.sa_handler = SIG_IGN;
    ::sigaction(SIGPIPE, &ignore, &old_pipe_);
  }
  ~SignalGuard() {
    ::sigaction(SIGINT, &old_int_, nullptr);
    ::sigaction(SIGTERM, &old_term_, nullptr);
    ::sigaction(SIGPIPE, &old_pipe_, nullptr);
  }

 private:
  struct sigaction old_int_ {};
  struct sigaction old_term_ {};
  struct sigaction old_pipe_ {};
};

std::string utc_now_iso() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string make_session_id(std::optional<std::uint64_t> seed) {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%dT%H%M%SZ", &tm);
  std::mt19937_64 rng(seed ? *seed : std::random_device{}());
  char suffix[8];
  std::snprintf(suffix, sizeof suffix, "%04x", static_cast<unsigned>(rng() & 0xffff));
  return std::string(stamp) + "-" + suffix;
}

std::optional<std::shared_ptr<const TrainingPlan>> read_plan(const fs::path& path,
                                                            std::ostream& err) {
  try {
    return std::make_shared<const TrainingPlan>(load_plan(path));
  } catch (const PlanError& e) {
    err << "astmon: invalid plan " << path.string();
    if (!e.path().empty()) err << " at " << e.path();
    err << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    err << "astmon: invalid plan " << path.string() << ": " << e.what() << "\n";
  }
  return std::nullopt;
}

bool output_dir_usable(const fs::path& dir, std::ostream& err) {
  std::error_code ec;
  if (fs::exists(dir / kSamplesFile, ec)) {
    err << "astmon: " << dir.string() << " already holds a session\n";
    return false;
  }
  return true;
}

/// Reads one sensor source on its own thread and stamps every decoded
/// reading at arrival, on the engine's clock.
class SensorReader {
 public:
  enum class Kind { kNmea, kAnt, kPlainHr };

  SensorReader(int fd, Kind kind, SensorQueue& queue,
               std::function<std::int64_t()> clock)
      : fd_(fd), kind_(kind), queue_(queue), clock_(std::move(clock)) {
    thread_ = std::thread([this] { loop(); });
  }
  ~SensorReader() {
    stop_.store(true);
    if (thread_.joinable()) thread_.join();
    ::close(fd_);
  }

 private:
  void loop() {
    NmeaStreamDecoder nmea;
    AntStreamDecoder ant;
    PlainHrDecoder plain;
    char buf[4096];
    while (!stop_.load()) {
      pollfd p{fd_, POLLIN, 0};
      const int r = ::poll(&p, 1, 100);
      if (r < 0 && errno != EINTR) return;
      if (r <= 0) continue;
      const ssize_t n = ::read(fd_, buf, sizeof buf);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        return;
      }
      if (n == 0) {
        // writer went away; a FIFO may be reopened by the next writer
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        continue;
      }
      const std::int64_t ts = clock_();
      const std::string_view chunk(buf, static_cast<std::size_t>(n));
      switch (kind_) {
        case Kind::kNmea:
          for (auto& f : nmea.feed(chunk, ts)) queue_.push(f);
          break;
        case Kind::kAnt: {
          const auto* b = reinterpret_cast<const std::uint8_t*>(buf);
          for (auto& h : ant.feed({b, static_cast<std::size_t>(n)}, ts)) queue_.push(h);
          break;
        }
        case Kind::kPlainHr:
          for (auto& h : plain.feed(chunk, ts)) queue_.push(h);
          break;
      }
    }
  }

  int fd_;
  Kind kind_;
  SensorQueue& queue_;
  std::function<std::int64_t()> clock_;
  std::atomic<bool> stop_{false};
  std::thread thread_;
};

int open_source(const fs::path& path, std::ostream& err) {
  const int fd = ::open(path.c_str(), O_RDONLY | O_NONBLOCK | O_CLOEXEC);
  if (fd < 0) err << "astmon: cannot open sensor source " << path.string() << ": "
                  << std::strerror(errno) << "\n";
  return fd;
}

std::string fixed(double v, int digits, bool sign = false) {
  std::ostringstream os;
  if (sign) os << std::showpos;
  os << std::fixed << std::setprecision(digits) << v;
  return os.str();
}

// Up to two decimals, trailing zeros trimmed but at least one kept: 0.0, 1.6, 1.75
std::string short_decimal(double v) {
  std::string s = fixed(v, 2);
  if (s.back() == '0') s.pop_back();
  return s;
}

std::string deviation_table(const std::vector<IntervalRecord>& records) {
  std::ostringstream os;
  os << " id  target  achieved  deviation    time  status\n";
  for (const auto& r : records) {
    os << std::setw(3) << r.exercise_id << std::setw(8) << r.target_hr << std::setw(10)
       << (r.achieved_avg_hr ? fixed(*r.achieved_avg_hr, 1) : "n/a") << std::setw(11)
       << (r.deviation_bpm ? fixed(*r.deviation_bpm, 1, true) : "n/a") << std::setw(8)
       << (std::to_string(r.elapsed_s) + "/" + std::to_string(r.duration_s)) << "  "
       << (r.completed ? "completed" : "partial") << "\n";
  }
  return os.str();
}

}  // namespace

int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  auto plan = read_plan(config.plan_path, err);
  if (!plan) return kConfigError;
  if (!(config.tolerance_bpm > 0)) {
    err << "astmon: tolerance must be positive\n";
    return kConfigError;
  }
  if (config.tick_ms <= 0) {
    err << "astmon: tick length must be positive\n";
    return kConfigError;
  }

  const auto epoch = std::chrono::steady_clock::now();
  const int tick_ms = config.tick_ms;
  // engine milliseconds: one engine second per tick
  auto clock = [epoch, tick_ms] {
    const auto real = std::chrono::duration_cast<std::chrono::microseconds>(
                          std::chrono::steady_clock::now() - epoch)
                          .count();
    return static_cast<std::int64_t>(real / tick_ms);
  };

  SensorQueue sensors;
  std::vector<std::unique_ptr<SensorReader>> readers;
  if (!config.gps_source.empty()) {
    const int fd = open_source(config.gps_source, err);
    if (fd < 0) return kSensorError;
    readers.push_back(
        std::make_unique<SensorReader>(fd, SensorReader::Kind::kNmea, sensors, clock));
  }
  if (!config.hr_source.empty()) {
    const int fd = open_source(config.hr_source, err);
    if (fd < 0) return kSensorError;
    const auto kind = config.hr_format == HrFormat::kAnt ? SensorReader::Kind::kAnt
                                                         : SensorReader::Kind::kPlainHr;
    readers.push_back(std::make_unique<SensorReader>(fd, kind, sensors, clock));
  }

  SessionMeta meta{make_session_id(config.seed), utc_now_iso(), config.tolerance_bpm};
  const fs::path dir =
      config.output_dir.empty() ? fs::path("sessions") / meta.session_id : config.output_dir;
  if (!output_dir_usable(dir, err)) return kConfigError;
  std::unique_ptr<SessionWriter> writer;
  try {
    writer = std::make_unique<SessionWriter>(dir, *plan, meta, Durability::kSync);
  } catch (const std::exception& e) {
    err << "astmon: " << e.what() << "\n";
    return kConfigError;
  }

  EngineOptions options;
  options.tolerance_bpm = config.tolerance_bpm;
  SessionHost host(*plan, options, std::move(writer));

  CommandQueue commands;
  GatewayConfig gw_config;
  gw_config.host = config.host;
  gw_config.port = config.port;
  gw_config.www_dir = config.www_dir;
  Gateway gateway(gw_config, commands, plan_to_json(**plan));
  try {
    gateway.start();
  } catch (const std::exception& e) {
    err << "astmon: " << e.what() << "\n";
    return kConfigError;
  }
  host.add_sink(&gateway);
  out << "session " << meta.session_id << " -> " << dir.string() << "\n"
      << "cockpit on http://" << config.host << ":" << gateway.port() << "/\n"
      << std::flush;

  SignalGuard signals;
  SampleFuser fuser;
  const auto period = std::chrono::milliseconds(tick_ms);
  auto next_tick = epoch + period;
  std::int64_t k = 1;
  while (!host.shutdown_requested()) {
    if (g_stop.load()) {
      host.command(CommandAction::kPoweroff);
      break;
    }
    const auto wake =
        std::min(next_tick, std::chrono::steady_clock::now() + std::chrono::milliseconds(100));
    if (auto cmd = commands.pop_until(wake)) {
      host.command(cmd->action);
      continue;
    }
    if (std::chrono::steady_clock::now() < next_tick) continue;
    for (auto& e : sensors.drain()) fuser.offer(e);
    host.tick(fuser.tick(k * 1000));
    ++k;
    next_tick += period;
  }

  host.remove_sink(&gateway);
  gateway.stop();
  readers.clear();
  const SessionWriter* w = host.writer();
  if (w && !w->healthy()) err << "astmon: storage alarm: " << w->alarm() << "\n";
  out << deviation_table(host.engine().records());
  return kOk;
}

int cmd_simulate(const SimulateConfig& config, std::ostream& out, std::ostream& err) {
  auto plan = read_plan(config.plan_path, err);
  if (!plan) return kConfigError;
  if (!(config.tolerance_bpm > 0)) {
    err << "astmon: tolerance must be positive\n";
    return kConfigError;
  }
  if (config.rest_s < 0 || config.tick_ms < 0) {
    err << "astmon: rest and tick length must not be negative\n";
    return kConfigError;
  }

  SimulationConfig sim;
  sim.rider = config.rider;
  sim.rider.rng_seed = config.seed;
  sim.policy = config.policy;
  sim.rest_s = config.rest_s;
  sim.tick_period = std::chrono::milliseconds(config.tick_ms);
  try {
    validate(sim.rider);
    if (!config.route_path.empty()) sim.route = load_route(config.route_path);
  } catch (const std::exception& e) {
    err << "astmon: " << e.what() << "\n";
    return kConfigError;
  }

  SessionMeta meta{"sim-" + std::to_string(config.seed), "1970-01-01T00:00:00Z",
                   config.tolerance_bpm};
  const fs::path dir =
      config.output_dir.empty() ? fs::path("sessions") / meta.session_id : config.output_dir;
  if (!output_dir_usable(dir, err)) return kConfigError;
  std::unique_ptr<SessionWriter> writer;
  try {
    writer = std::make_unique<SessionWriter>(dir, *plan, meta, Durability::kFlush);
  } catch (const std::exception& e) {
    err << "astmon: " << e.what() << "\n";
    return kConfigError;
  }

  EngineOptions options;
  options.tolerance_bpm = config.tolerance_bpm;
  SessionHost host(*plan, options, std::move(writer));

  CommandQueue commands;  // the simulated rider presses the buttons itself
  std::unique_ptr<Gateway> gateway;
  if (config.port) {
    GatewayConfig gw_config;
    gw_config.host = config.host;
    gw_config.port = *config.port;
    gateway = std::make_unique<Gateway>(gw_config, commands, plan_to_json(**plan));
    try {
      gateway->start();
    } catch (const std::exception& e) {
      err << "astmon: " << e.what() << "\n";
      return kConfigError;
    }
    host.add_sink(gateway.get());
    out << "cockpit on http://" << config.host << ":" << gateway->port() << "/\n" << std::flush;
  }

  const SimulationResult result = run_simulation(host, sim);
  if (gateway) {
    host.remove_sink(gateway.get());
    gateway->stop();
  }

  out << "simulated " << result.ticks << " s -> " << dir.string() << "\n";
  out << deviation_table(host.engine().records());
  const json summary = host.session_summary();
  const json& mad = summary["aggregates"]["mean_abs_deviation_bpm"];
  out << "mean |deviation|: " << (mad.is_null() ? "n/a" : short_decimal(mad.get<double>()) + " bpm")
      << "\n";
  return kOk;
}

int cmd_replay(const fs::path& session_dir, std::ostream& out, std::ostream& err) {
  ReplayReport report;
  try {
    report = replay_session(session_dir);
  } catch (const std::exception& e) {
    err << "astmon: " << e.what() << "\n";
    return kConfigError;
  }
  if (!report.identical) {
    out << "replay diverged: " << report.divergence << "\n";
    return kReplayMismatch;
  }
  out << "replay identical: " << report.rows << " rows, " << report.records.size()
      << " intervals\n";
  return kOk;
}

std::string format_report(const json& summary) {
  std::vector<IntervalRecord> records;
  for (const char* key : {"intervals", "partial_intervals"}) {
    for (const auto& r : summary.at(key)) records.push_back(record_from_json(r));
  }
  std::stable_sort(records.begin(), records.end(),
                   [](const auto& a, const auto& b) { return a.exercise_id < b.exercise_id; });

  const json& agg = summary.at("aggregates");
  std::ostringstream os;
  os << "session " << summary.at("session_id").get<std::string>() << " ("
     << summary.at("plan_name").get<std::string>() << "), started "
     << summary.at("started_at").get<std::string>() << "\n";
  os << "tolerance: " << format_number(summary.at("tolerance_bpm").get<double>()) << " bpm\n\n";
  os << deviation_table(records) << "\n";
  const json& mad = agg.at("mean_abs_deviation_bpm");
  os << "completed: " << agg.at("completed_intervals").get<int>()
     << "  partial: " << agg.at("partial_intervals").get<int>() << "\n";
  os << "mean |deviation|: " << (mad.is_null() ? "n/a" : short_decimal(mad.get<double>()) + " bpm")
     << "\n";
  os << "interval time: " << agg.at("interval_time_s").get<std::int64_t>()
     << " s  session time: " << agg.at("session_time_s").get<std::int64_t>() << " s\n";
  os << "distance: " << fixed(agg.at("distance_m").get<double>() / 1000.0, 2)
     << " km  ascent: " << fixed(agg.at("ascent_m").get<double>(), 1) << " m\n";
  return os.str();
}

int cmd_analyze(const fs::path& session_dir, std::ostream& out, std::ostream& err) {
  std::ifstream in(session_dir / kSummaryFile);
  if (!in) {
    err << "astmon: no " << kSummaryFile << " in " << session_dir.string() << "\n";
    return kConfigError;
  }
  try {
    out << format_report(json::parse(in));
  } catch (const std::exception& e) {
    err << "astmon: unreadable " << kSummaryFile << ": " << e.what() << "\n";
    return kConfigError;
  }
  return kOk;
}

int main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"astmon - heart-rate interval trainer head unit"};
  app.require_subcommand(1);

  RunConfig run;
  std::string hr_format = "ant";
  auto* run_cmd = app.add_subcommand("run", "Ride a plan with live sensors and the cockpit");
  run_cmd->add_option("--plan", run.plan_path, "Training plan JSON file")->required();
  run_cmd->add_option("--out", run.output_dir,
                      "Session directory (default: sessions/<session id>)");
  run_cmd->add_option("--gps", run.gps_source, "NMEA 0183 source (tty, FIFO or file)");
  run_cmd->add_option("--hr", run.hr_source, "Heart-rate source (tty, FIFO or file)");
  run_cmd->add_option("--hr-format", hr_format, "Heart-rate byte format")
      ->check(CLI::IsMember({"ant", "plain"}))
      ->capture_default_str();
  run_cmd->add_option("--tolerance", run.tolerance_bpm, "Feedback band half-width in bpm")
      ->capture_default_str();
  run_cmd->add_option("--host", run.host, "Address the gateway binds")->capture_default_str();
  run_cmd->add_option("--port", run.port, "Gateway port (env AST_MONITOR_PORT)")
      ->envname("AST_MONITOR_PORT")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  run_cmd->add_option("--seed", run.seed, "Seed for the session id suffix");
  run_cmd->add_option("--tick-ms", run.tick_ms, "Wall-clock milliseconds per engine second")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  run_cmd->add_option("--www", run.www_dir, "Cockpit static files served at /");

  SimulateConfig simc;
  std::optional<int> sim_port;
  auto* sim_cmd =
      app.add_subcommand("simulate", "Ride a plan with a simulated rider and sensors");
  sim_cmd->add_option("--plan", simc.plan_path, "Training plan JSON file")->required();
  sim_cmd->add_option("--out", simc.output_dir, "Session directory (default: sessions/sim-<seed>)");
  sim_cmd->add_option("--tolerance", simc.tolerance_bpm, "Feedback band half-width in bpm")
      ->capture_default_str();
  sim_cmd->add_option("--seed", simc.seed, "Rider noise seed")->capture_default_str();
  sim_cmd->add_option("--rest-s", simc.rest_s, "Rest before each interval, in seconds")
      ->capture_default_str();
  sim_cmd->add_option("--noise-sd", simc.rider.noise_sd, "Heart-rate noise, bpm per sqrt(s)")
      ->capture_default_str();
  sim_cmd->add_option("--tau", simc.rider.tau_s, "Heart-rate time constant in seconds")
      ->capture_default_str();
  sim_cmd->add_option("--hr-rest", simc.rider.hr_rest, "Resting heart rate")
      ->capture_default_str();
  sim_cmd->add_option("--hr-max", simc.rider.hr_max, "Maximum heart rate")->capture_default_str();
  sim_cmd->add_option("--gain", simc.policy.gain, "Effort change per reaction to feedback")
      ->capture_default_str();
  sim_cmd->add_option("--reaction-s", simc.policy.reaction_s, "Seconds between reactions to feedback")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sim_cmd->add_option("--route", simc.route_path, "Route file, a JSON array of {lat, lon, altitude_m}");
  sim_cmd->add_option("--port", sim_port, "Serve the cockpit on this port while simulating")
      ->check(CLI::Range(0, 65535));
  sim_cmd->add_option("--tick-ms", simc.tick_ms,
                      "Wall-clock milliseconds per simulated second (0: as fast as possible)")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();

  fs::path replay_dir;
  auto* replay_cmd =
      app.add_subcommand("replay", "Re-run a recorded session and check it reproduces exactly");
  replay_cmd->add_option("session_dir", replay_dir, "Session directory")->required();

  fs::path analyze_dir;
  auto* analyze_cmd = app.add_subcommand("analyze", "Print the per-interval report of a session");
  analyze_cmd->add_option("session_dir", analyze_dir, "Session directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "astmon: " << e.what() << "\n";
    if (const auto* sub = app.get_subcommands().empty() ? nullptr : app.get_subcommands().front())
      err << "see: astmon " << sub->get_name() << " --help\n";
    return kConfigError;
  }

  if (run_cmd->parsed()) {
    run.hr_format = hr_format == "plain" ? HrFormat::kPlain : HrFormat::kAnt;
    return cmd_run(run, out, err);
  }
  if (sim_cmd->parsed()) {
    if (sim_port) simc.port = static_cast<unsigned short>(*sim_port);
    return cmd_simulate(simc, out, err);
  }
  if (replay_cmd->parsed()) return cmd_replay(replay_dir, out, err);
  return cmd_analyze(analyze_dir, out, err);
}

}  // namespace astmon::cli
