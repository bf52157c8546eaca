#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace astmon {

struct HeartRateReading {
  std::int64_t timestamp_ms = 0;
  int bpm = 0;

  bool operator==(const HeartRateReading&) const = default;
};

inline constexpr std::size_t kAntPayloadSize = 8;
inline constexpr std::uint8_t kAntSync = 0xA4;
inline constexpr std::uint8_t kAntBroadcastData = 0x4E;

enum class AntFrameError {
  kWrongLength,
  kNoHeartRate,  // computed heart rate byte is 0 or 0xFF
};

using AntHrResult = std::variant<HeartRateReading, AntFrameError>;

/// Heart-rate profile data page: the computed heart rate lives in byte 7.
AntHrResult parse_ant_hr(std::span<const std::uint8_t> payload, std::int64_t timestamp_ms = 0);

/// Wraps an 8-byte payload in a broadcast-data serial message:
/// sync, length, id, channel, payload, XOR checksum.
std::vector<std::uint8_t> encode_ant_broadcast(std::uint8_t channel,
                                               std::span<const std::uint8_t> payload);

/// Resynchronising decoder for ANT serial messages. Broadcast-data messages
/// are unwrapped to heart-rate readings; other message ids are skipped.
class AntStreamDecoder {
 public:
  struct Counters {
    std::uint64_t messages = 0;
    std::uint64_t readings = 0;
    std::uint64_t ignored = 0;
    std::uint64_t checksum_errors = 0;
    std::uint64_t invalid_hr = 0;
    std::uint64_t skipped_bytes = 0;
  };

  std::vector<HeartRateReading> feed(std::span<const std::uint8_t> bytes,
                                     std::int64_t timestamp_ms);

  const Counters& counters() const noexcept { return counters_; }

 private:
  std::vector<std::uint8_t> buffer_;
  Counters counters_;
};

/// Newline-delimited decimal bpm, one value per line (`--hr-format=plain`).
class PlainHrDecoder {
 public:
  std::vector<HeartRateReading> feed(std::string_view bytes, std::int64_t timestamp_ms);
  std::uint64_t rejected() const noexcept { return rejected_; }

 private:
  std::string pending_;
  std::uint64_t rejected_ = 0;
};

}  // namespace astmon
