#include "astmon/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "astmon/ant.hpp"
#include "astmon/metrics.hpp"
#include "astmon/nmea.hpp"
#include "json.hpp"

namespace astmon {

double RiderModel::effort_for(double target_hr) const noexcept {
  return std::clamp((target_hr - hr_rest) / (hr_max - hr_rest), 0.0, 1.0);
}

void validate(const RiderModel& m) {
  if (!(m.hr_rest < m.hr_max)) throw std::invalid_argument("hr_rest must be below hr_max");
  if (!(m.tau_s > 0.0)) throw std::invalid_argument("tau_s must be positive");
  if (!(m.effort >= 0.0 && m.effort <= 1.0)) throw std::invalid_argument("effort outside [0, 1]");
  if (!(m.noise_sd >= 0.0)) throw std::invalid_argument("noise_sd must be non-negative");
}

RiderModel step_hr(const RiderModel& model, double dt_s, Rng& rng) {
  RiderModel next = model;
  const double target = model.steady_state_hr();
  // exact solution of the first-order lag over dt, so the step size does
  // not bias the trajectory
  const double decay = std::exp(-dt_s / model.tau_s);
  next.hr = target + (model.hr - target) * decay;
  if (model.noise_sd > 0.0) {
    std::normal_distribution<double> noise(0.0, model.noise_sd * std::sqrt(dt_s));
    next.hr += noise(rng);
  }
  return next;
}

int emitted_bpm(const RiderModel& model) noexcept {
  return static_cast<int>(std::lround(std::clamp(model.hr, 30.0, 230.0)));
}

RiderModel apply_feedback(const RiderPolicy& policy, const RiderModel& model,
                          Feedback feedback) noexcept {
  RiderModel next = model;
  switch (feedback) {
    case Feedback::kBelow:
      next.effort += policy.gain;
      break;
    case Feedback::kAbove:
      next.effort -= policy.gain;
      break;
    case Feedback::kOnTrack:
      break;
  }
  next.effort = std::clamp(next.effort, 0.0, 1.0);
  return next;
}

RiderModel prepare_for(const RiderPolicy& policy, const RiderModel& model, double target_hr,
                       double current_hr) noexcept {
  RiderModel next = model;
  const double range = model.hr_max - model.hr_rest;
  next.effort = std::clamp(
      model.effort_for(target_hr) + policy.recovery_gain * (target_hr - current_hr) / range, 0.0,
      1.0);
  return next;
}

std::vector<Waypoint> parse_route(std::string_view document) {
  const auto j = nlohmann::json::parse(document.begin(), document.end(), nullptr, false);
  if (j.is_discarded() || !j.is_array()) {
    throw std::runtime_error("route must be a JSON array of waypoints");
  }
  std::vector<Waypoint> route;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto& w = j[i];
    const std::string where = "route[" + std::to_string(i) + "]";
    if (!w.is_object() || !w.contains("lat") || !w.contains("lon") ||
        !w.contains("altitude_m") || !w["lat"].is_number() || !w["lon"].is_number() ||
        !w["altitude_m"].is_number()) {
      throw std::runtime_error(where + ": expected {lat, lon, altitude_m}");
    }
    Waypoint p{w["lat"].get<double>(), w["lon"].get<double>(), w["altitude_m"].get<double>()};
    if (std::abs(p.lat) > 90.0 || std::abs(p.lon) > 180.0) {
      throw std::runtime_error(where + ": coordinate out of range");
    }
    route.push_back(p);
  }
  if (route.empty()) throw std::runtime_error("route must not be empty");
  return route;
}

std::vector<Waypoint> load_route(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open route file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_route(buffer.str());
}

std::vector<Waypoint> default_route() {
  // roughly 4.4 km loop with a 40 m climb on the east side
  return {
      {46.0000, 15.0000, 250.0}, {46.0000, 15.0100, 262.0}, {46.0050, 15.0150, 290.0},
      {46.0100, 15.0100, 281.0}, {46.0100, 15.0000, 258.0}, {46.0050, 14.9950, 252.0},
  };
}

RouteFollower::RouteFollower(std::vector<Waypoint> route) : route_(std::move(route)) {
  if (route_.empty()) throw std::invalid_argument("route must not be empty");
  if (route_.size() > 1) {
    for (std::size_t i = 0; i < route_.size(); ++i) {
      const Waypoint& a = route_[i];
      const Waypoint& b = route_[(i + 1) % route_.size()];
      segment_m_.push_back(haversine(a.lat, a.lon, b.lat, b.lon));
    }
  }
}

void RouteFollower::advance(double meters) {
  if (segment_m_.empty() || meters <= 0.0) return;
  double total = 0.0;
  for (double s : segment_m_) total += s;
  if (total <= 0.0) return;
  travelled_ += meters;
  meters = std::fmod(meters, total);
  offset_m_ += meters;
  while (offset_m_ >= segment_m_[segment_]) {
    offset_m_ -= segment_m_[segment_];
    segment_ = (segment_ + 1) % segment_m_.size();
  }
}

Waypoint RouteFollower::position() const {
  if (segment_m_.empty()) return route_.front();
  const Waypoint& a = route_[segment_];
  const Waypoint& b = route_[(segment_ + 1) % route_.size()];
  const double len = segment_m_[segment_];
  const double f = len > 0.0 ? offset_m_ / len : 0.0;
  return {a.lat + (b.lat - a.lat) * f, a.lon + (b.lon - a.lon) * f,
          a.altitude_m + (b.altitude_m - a.altitude_m) * f};
}

double simulated_speed_mps(double effort) noexcept { return 2.0 + 10.0 * effort; }

namespace {

/// ddmm.mmmm / dddmm.mmmm with the minutes rounded to 1e-4.
std::string format_coordinate(double degrees, int degree_digits) {
  const auto ten_thousandths = static_cast<long long>(std::llround(std::abs(degrees) * 600000.0));
  const long long whole = ten_thousandths / 600000;
  const long long rem = ten_thousandths % 600000;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*lld%02lld.%04lld", degree_digits, whole, rem / 10000,
                rem % 10000);
  return buf;
}

std::string format_utc(std::int64_t utc_ms) {
  const std::int64_t day_ms = ((utc_ms % 86400000) + 86400000) % 86400000;
  const auto s = day_ms / 1000;
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%02lld%02lld%02lld.%02lld", static_cast<long long>(s / 3600),
                static_cast<long long>((s / 60) % 60), static_cast<long long>(s % 60),
                static_cast<long long>((day_ms % 1000) / 10));
  return buf;
}

std::string frame_sentence(const std::string& body) {
  char tail[8];
  std::snprintf(tail, sizeof(tail), "*%02X\r\n", nmea_checksum(body));
  return "$" + body + tail;
}

}  // namespace

std::string format_gga(std::int64_t utc_ms, double lat, double lon, double altitude_m) {
  char alt[32];
  std::snprintf(alt, sizeof(alt), "%.1f", altitude_m);
  std::string body = "GPGGA," + format_utc(utc_ms) + "," + format_coordinate(lat, 2) + "," +
                     (lat < 0 ? "S" : "N") + "," + format_coordinate(lon, 3) + "," +
                     (lon < 0 ? "W" : "E") + ",1,08,0.9," + alt + ",M,46.9,M,,";
  return frame_sentence(body);
}

std::string format_rmc(std::int64_t utc_ms, double lat, double lon, double speed_mps) {
  char knots[32];
  std::snprintf(knots, sizeof(knots), "%.2f", speed_mps / kMpsPerKnot);
  std::string body = "GPRMC," + format_utc(utc_ms) + ",A," + format_coordinate(lat, 2) + "," +
                     (lat < 0 ? "S" : "N") + "," + format_coordinate(lon, 3) + "," +
                     (lon < 0 ? "W" : "E") + "," + knots + ",0.0,010120,,,A";
  return frame_sentence(body);
}

SensorStreamEmitter::Tick SensorStreamEmitter::emit(std::int64_t t_ms, const Waypoint& position,
                                                    double speed_mps, int bpm) {
  Tick tick;
  tick.nmea = format_gga(t_ms, position.lat, position.lon, position.altitude_m) +
              format_rmc(t_ms, position.lat, position.lon, speed_mps);

  // heart-beat event bookkeeping for the data page
  const double dt_s = static_cast<double>(t_ms - last_ms_) / 1000.0;
  last_ms_ = t_ms;
  const std::uint16_t previous_time = beat_time_;
  if (bpm > 0 && dt_s > 0.0) {
    beat_phase_s_ += dt_s;
    const double period = 60.0 / bpm;
    while (beat_phase_s_ >= period) {
      beat_phase_s_ -= period;
      ++beat_count_;
      beat_time_ = static_cast<std::uint16_t>(beat_time_ + std::lround(period * 1024.0));
    }
  }
  const std::uint8_t payload[kAntPayloadSize] = {
      0x04,
      0xFF,
      static_cast<std::uint8_t>(previous_time & 0xFF),
      static_cast<std::uint8_t>(previous_time >> 8),
      static_cast<std::uint8_t>(beat_time_ & 0xFF),
      static_cast<std::uint8_t>(beat_time_ >> 8),
      beat_count_,
      static_cast<std::uint8_t>(std::clamp(bpm, 1, 254)),
  };
  tick.ant = encode_ant_broadcast(0, payload);
  return tick;
}

}  // namespace astmon
