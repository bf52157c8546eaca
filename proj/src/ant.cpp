#include "astmon/ant.hpp"

#include <algorithm>
#include <charconv>

namespace astmon {

namespace {

// Longest message we accept; standard data messages carry 9 bytes, flagged
// extended data a few more.
constexpr std::size_t kMaxAntData = 32;

}  // namespace

AntHrResult parse_ant_hr(std::span<const std::uint8_t> payload, std::int64_t timestamp_ms) {
  if (payload.size() != kAntPayloadSize) return AntFrameError::kWrongLength;
  const std::uint8_t bpm = payload[7];
  if (bpm == 0 || bpm == 0xFF) return AntFrameError::kNoHeartRate;
  return HeartRateReading{timestamp_ms, bpm};
}

std::vector<std::uint8_t> encode_ant_broadcast(std::uint8_t channel,
                                               std::span<const std::uint8_t> payload) {
  std::vector<std::uint8_t> msg;
  msg.reserve(payload.size() + 5);
  msg.push_back(kAntSync);
  msg.push_back(static_cast<std::uint8_t>(payload.size() + 1));
  msg.push_back(kAntBroadcastData);
  msg.push_back(channel);
  msg.insert(msg.end(), payload.begin(), payload.end());
  std::uint8_t sum = 0;
  for (auto b : msg) sum ^= b;
  msg.push_back(sum);
  return msg;
}

std::vector<HeartRateReading> AntStreamDecoder::feed(std::span<const std::uint8_t> bytes,
                                                     std::int64_t timestamp_ms) {
  std::vector<HeartRateReading> out;
  buffer_.insert(buffer_.end(), bytes.begin(), bytes.end());

  std::size_t pos = 0;
  while (pos < buffer_.size()) {
    if (buffer_[pos] != kAntSync) {
      ++pos;
      ++counters_.skipped_bytes;
      continue;
    }
    if (buffer_.size() - pos < 2) break;
    const std::size_t len = buffer_[pos + 1];
    if (len == 0 || len > kMaxAntData) {
      ++pos;
      ++counters_.skipped_bytes;
      continue;
    }
    const std::size_t total = len + 4;
    if (buffer_.size() - pos < total) break;

    std::uint8_t sum = 0;
    for (std::size_t i = 0; i < total - 1; ++i) sum ^= buffer_[pos + i];
    if (sum != buffer_[pos + total - 1]) {
      ++counters_.checksum_errors;
      ++pos;
      ++counters_.skipped_bytes;
      continue;
    }

    ++counters_.messages;
    const std::uint8_t id = buffer_[pos + 2];
    if (id == kAntBroadcastData && len >= kAntPayloadSize + 1) {
      const std::span<const std::uint8_t> payload(buffer_.data() + pos + 4, kAntPayloadSize);
      auto result = parse_ant_hr(payload, timestamp_ms);
      if (auto* reading = std::get_if<HeartRateReading>(&result)) {
        ++counters_.readings;
        out.push_back(*reading);
      } else {
        ++counters_.invalid_hr;
      }
    } else {
      ++counters_.ignored;
    }
    pos += total;
  }
  buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(pos));
  return out;
}

std::vector<HeartRateReading> PlainHrDecoder::feed(std::string_view bytes,
                                                   std::int64_t timestamp_ms) {
  std::vector<HeartRateReading> out;
  for (char c : bytes) {
    if (c != '\n') {
      if (pending_.size() < 32) pending_.push_back(c);
      continue;
    }
    std::string_view line = pending_;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.remove_suffix(1);
    while (!line.empty() && line.front() == ' ') line.remove_prefix(1);
    if (!line.empty()) {
      int bpm = 0;
      auto [ptr, ec] = std::from_chars(line.data(), line.data() + line.size(), bpm);
      if (ec == std::errc{} && ptr == line.data() + line.size() && bpm >= 1 && bpm <= 254) {
        out.push_back(HeartRateReading{timestamp_ms, bpm});
      } else {
        ++rejected_;
      }
    }
    pending_.clear();
  }
  return out;
}

}  // namespace astmon
