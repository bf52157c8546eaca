#include "astmon/nmea.hpp"

#include <charconv>
#include <cmath>

namespace astmon {

namespace {

std::vector<std::string_view> split_fields(std::string_view body) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const auto comma = body.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(body.substr(start));
      return fields;
    }
    fields.push_back(body.substr(start, comma - start));
    start = comma + 1;
  }
}

int hex_value(char c) noexcept {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

bool all_digits(std::string_view s) noexcept {
  if (s.empty()) return false;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
  }
  return true;
}

/// Unsigned decimal: digits with at most one '.', no sign or exponent.
std::optional<double> parse_decimal(std::string_view s) {
  if (s.empty()) return std::nullopt;
  bool seen_dot = false;
  bool seen_digit = false;
  for (char c : s) {
    if (c == '.') {
      if (seen_dot) return std::nullopt;
      seen_dot = true;
    } else if (c >= '0' && c <= '9') {
      seen_digit = true;
    } else {
      return std::nullopt;
    }
  }
  if (!seen_digit) return std::nullopt;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

/// Signed decimal, for altitude below the geoid.
std::optional<double> parse_signed_decimal(std::string_view s) {
  if (!s.empty() && s.front() == '-') {
    auto v = parse_decimal(s.substr(1));
    if (!v) return std::nullopt;
    return -*v;
  }
  return parse_decimal(s);
}

/// hhmmss or hhmmss.sss
std::optional<std::int64_t> parse_utc(std::string_view s) {
  if (s.size() < 6) return std::nullopt;
  const auto hms = s.substr(0, 6);
  if (!all_digits(hms)) return std::nullopt;
  const int hh = (hms[0] - '0') * 10 + (hms[1] - '0');
  const int mm = (hms[2] - '0') * 10 + (hms[3] - '0');
  const int ss = (hms[4] - '0') * 10 + (hms[5] - '0');
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;
  std::int64_t ms = ((hh * 60 + mm) * 60 + ss) * 1000LL;
  if (s.size() > 6) {
    if (s[6] != '.') return std::nullopt;
    const auto frac = s.substr(7);
    if (frac.empty()) return ms;
    if (!all_digits(frac)) return std::nullopt;
    // keep millisecond resolution
    double scale = 100.0;
    double extra = 0.0;
    for (char c : frac) {
      extra += (c - '0') * scale;
      scale /= 10.0;
    }
    ms += static_cast<std::int64_t>(extra);
  }
  return ms;
}

struct Decoded {
  std::optional<NmeaError> error;
  GpsFix fix;
};

Decoded decode_position(std::string_view lat, std::string_view ns, std::string_view lon,
                        std::string_view ew, GpsFix fix, bool required) {
  Decoded out{std::nullopt, fix};
  if (lat.empty() && lon.empty() && ns.empty() && ew.empty()) {
    if (required) out.error = NmeaError::kMalformedField;
    return out;
  }
  auto la = nmea_coordinate(lat, ns, 2);
  auto lo = nmea_coordinate(lon, ew, 3);
  if (!la || !lo) {
    out.error = NmeaError::kMalformedField;
    return out;
  }
  if (std::abs(*la) > 90.0 || std::abs(*lo) > 180.0) {
    out.error = NmeaError::kOutOfRange;
    return out;
  }
  out.fix.lat = *la;
  out.fix.lon = *lo;
  return out;
}

NmeaResult decode_gga(const std::vector<std::string_view>& f, std::int64_t timestamp_ms) {
  if (f.size() < 10) return NmeaError::kMalformedField;
  GpsFix fix;
  fix.timestamp_ms = timestamp_ms;
  if (!f[1].empty()) {
    fix.utc_ms = parse_utc(f[1]);
    if (!fix.utc_ms) return NmeaError::kMalformedField;
  }
  if (f[6].empty() || !all_digits(f[6])) return NmeaError::kMalformedField;
  int quality = 0;
  std::from_chars(f[6].data(), f[6].data() + f[6].size(), quality);
  const bool has_fix = quality > 0;

  auto pos = decode_position(f[2], f[3], f[4], f[5], fix, has_fix);
  if (pos.error) return *pos.error;
  fix = pos.fix;

  if (!f[9].empty()) {
    auto alt = parse_signed_decimal(f[9]);
    if (!alt) return NmeaError::kMalformedField;
    fix.altitude_m = *alt;
  }
  fix.valid = has_fix;
  return fix;
}

NmeaResult decode_rmc(const std::vector<std::string_view>& f, std::int64_t timestamp_ms) {
  if (f.size() < 10) return NmeaError::kMalformedField;
  GpsFix fix;
  fix.timestamp_ms = timestamp_ms;
  if (!f[1].empty()) {
    fix.utc_ms = parse_utc(f[1]);
    if (!fix.utc_ms) return NmeaError::kMalformedField;
  }
  bool active = false;
  if (f[2] == "A") {
    active = true;
  } else if (f[2] != "V") {
    return NmeaError::kMalformedField;
  }

  auto pos = decode_position(f[3], f[4], f[5], f[6], fix, active);
  if (pos.error) return *pos.error;
  fix = pos.fix;

  if (!f[7].empty()) {
    auto knots = parse_decimal(f[7]);
    if (!knots) return NmeaError::kMalformedField;
    fix.speed_mps = *knots * kMpsPerKnot;
  }
  fix.valid = active;
  return fix;
}

}  // namespace

const char* to_string(NmeaError error) noexcept {
  switch (error) {
    case NmeaError::kFraming:
      return "framing error";
    case NmeaError::kChecksumMismatch:
      return "checksum mismatch";
    case NmeaError::kMalformedField:
      return "malformed field";
    case NmeaError::kOutOfRange:
      return "out-of-range coordinate";
  }
  return "unknown";
}

std::uint8_t nmea_checksum(std::string_view body) noexcept {
  std::uint8_t sum = 0;
  for (char c : body) sum ^= static_cast<std::uint8_t>(c);
  return sum;
}

std::optional<double> nmea_coordinate(std::string_view value, std::string_view hemisphere,
                                      int degree_digits) {
  const auto dot = value.find('.');
  const std::size_t int_len = dot == std::string_view::npos ? value.size() : dot;
  if (int_len != static_cast<std::size_t>(degree_digits) + 2) return std::nullopt;
  const auto deg_part = value.substr(0, static_cast<std::size_t>(degree_digits));
  if (!all_digits(deg_part)) return std::nullopt;
  auto minutes = parse_decimal(value.substr(static_cast<std::size_t>(degree_digits)));
  if (!minutes || *minutes >= 60.0) return std::nullopt;

  int degrees = 0;
  std::from_chars(deg_part.data(), deg_part.data() + deg_part.size(), degrees);
  double result = degrees + *minutes / 60.0;

  if (degree_digits == 2) {
    if (hemisphere == "S") {
      result = -result;
    } else if (hemisphere != "N") {
      return std::nullopt;
    }
  } else {
    if (hemisphere == "W") {
      result = -result;
    } else if (hemisphere != "E") {
      return std::nullopt;
    }
  }
  return result;
}

NmeaResult parse_nmea(std::string_view line, std::int64_t timestamp_ms) {
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) {
    line.remove_suffix(1);
  }
  if (line.size() < 4 || line.front() != '$') return NmeaError::kFraming;
  const auto star = line.rfind('*');
  if (star == std::string_view::npos || star + 3 != line.size()) return NmeaError::kFraming;

  const auto body = line.substr(1, star - 1);
  if (body.empty()) return NmeaError::kFraming;
  for (char c : body) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x20 || u > 0x7e || c == '$' || c == '*') return NmeaError::kFraming;
  }
  const int hi = hex_value(line[star + 1]);
  const int lo = hex_value(line[star + 2]);
  if (hi < 0 || lo < 0) return NmeaError::kFraming;
  if (nmea_checksum(body) != static_cast<std::uint8_t>(hi * 16 + lo)) {
    return NmeaError::kChecksumMismatch;
  }

  const auto fields = split_fields(body);
  const auto tag = fields.front();
  if (tag.size() == 5) {
    const auto type = tag.substr(2);
    if (type == "GGA") return decode_gga(fields, timestamp_ms);
    if (type == "RMC") return decode_rmc(fields, timestamp_ms);
  }
  return NoFix{std::string(tag)};
}

std::vector<GpsFix> NmeaStreamDecoder::feed(std::string_view bytes, std::int64_t timestamp_ms) {
  std::vector<GpsFix> out;
  for (char c : bytes) {
    if (c == '\n') {
      if (overlong_) {
        ++counters_.dropped;
      } else if (!pending_.empty()) {
        handle_line(pending_, timestamp_ms, out);
      }
      pending_.clear();
      overlong_ = false;
      continue;
    }
    if (overlong_) continue;
    if (pending_.size() >= kMaxLine) {
      overlong_ = true;
      pending_.clear();
      continue;
    }
    pending_.push_back(c);
  }
  return out;
}

void NmeaStreamDecoder::handle_line(std::string_view line, std::int64_t timestamp_ms,
                                    std::vector<GpsFix>& out) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.empty()) return;
  ++counters_.sentences;
  const auto result = parse_nmea(line, timestamp_ms);
  if (const auto* fix = std::get_if<GpsFix>(&result)) {
    ++counters_.fixes;
    out.push_back(merge(*fix));
  } else if (std::holds_alternative<NoFix>(result)) {
    ++counters_.ignored;
  } else {
    if (std::get<NmeaError>(result) == NmeaError::kChecksumMismatch) {
      ++counters_.checksum_errors;
    }
    ++counters_.dropped;
  }
}

GpsFix NmeaStreamDecoder::merge(const GpsFix& fix) {
  GpsFix merged = fix;
  if (epoch_ && fix.utc_ms && epoch_->utc_ms == fix.utc_ms) {
    if (!merged.altitude_m) merged.altitude_m = epoch_->altitude_m;
    if (!merged.speed_mps) merged.speed_mps = epoch_->speed_mps;
    merged.valid = fix.valid && epoch_->valid;
  }
  epoch_ = merged;
  return merged;
}

}  // namespace astmon
