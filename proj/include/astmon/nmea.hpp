#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace astmon {

/// Position report decoded from GGA or RMC. Coordinates are decimal
/// degrees, south and west negative.
struct GpsFix {
  std::int64_t timestamp_ms = 0;
  double lat = 0.0;
  double lon = 0.0;
  std::optional<double> altitude_m;
  std::optional<double> speed_mps;
  bool valid = false;
  /// UTC time of day carried by the sentence, used to pair GGA with RMC.
  std::optional<std::int64_t> utc_ms;

  bool operator==(const GpsFix&) const = default;
};

/// Sentence was well formed but carries nothing we decode (GSV, VTG, ...).
struct NoFix {
  std::string sentence_type;
  bool operator==(const NoFix&) const = default;
};

enum class NmeaError {
  kFraming,
  kChecksumMismatch,
  kMalformedField,
  kOutOfRange,
};

const char* to_string(NmeaError error) noexcept;

using NmeaResult = std::variant<GpsFix, NoFix, NmeaError>;

inline constexpr double kMpsPerKnot = 0.514444;

/// XOR of every byte of the sentence body (between '$' and '*').
std::uint8_t nmea_checksum(std::string_view body) noexcept;

/// Decodes one sentence, `$...*hh` with optional trailing CR/LF.
NmeaResult parse_nmea(std::string_view line, std::int64_t timestamp_ms = 0);

/// Converts `ddmm.mmmm` / `dddmm.mmmm` plus hemisphere to signed degrees.
std::optional<double> nmea_coordinate(std::string_view value, std::string_view hemisphere,
                                      int degree_digits);

/// Splits a byte stream into LF/CRLF-terminated sentences, decodes them and
/// pairs same-epoch GGA and RMC reports into one fix.
class NmeaStreamDecoder {
 public:
  struct Counters {
    std::uint64_t sentences = 0;
    std::uint64_t fixes = 0;
    std::uint64_t ignored = 0;
    std::uint64_t checksum_errors = 0;
    std::uint64_t dropped = 0;  // every rejected line, checksum errors included
  };

  /// Maximum accepted line length; longer garbage is discarded.
  static constexpr std::size_t kMaxLine = 120;

  /// Feeds raw bytes stamped with their arrival time; returns the fixes
  /// completed by them.
  std::vector<GpsFix> feed(std::string_view bytes, std::int64_t timestamp_ms);

  const Counters& counters() const noexcept { return counters_; }

 private:
  void handle_line(std::string_view line, std::int64_t timestamp_ms, std::vector<GpsFix>& out);
  GpsFix merge(const GpsFix& fix);

  std::string pending_;
  bool overlong_ = false;
  std::optional<GpsFix> epoch_;
  Counters counters_;
};

}  // namespace astmon
