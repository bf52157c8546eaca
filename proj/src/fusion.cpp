#include "astmon/fusion.hpp"

#include <algorithm>
#include <tuple>

namespace astmon {

std::int64_t event_timestamp(const SensorEvent& event) noexcept {
  return std::visit([](const auto& e) { return e.timestamp_ms; }, event);
}

void SampleFuser::offer(const SensorEvent& event) { pending_.push_back(event); }

void SampleFuser::apply(const SensorEvent& event) {
  if (const auto* hr = std::get_if<HeartRateReading>(&event)) {
    if (!hr_ || hr->timestamp_ms >= hr_->timestamp_ms) hr_ = *hr;
    return;
  }
  const auto& fix = std::get<GpsFix>(event);
  if (!fix.valid) {
    ++invalid_fixes_;
    return;
  }
  if (!fix_ || fix.timestamp_ms >= fix_->timestamp_ms) fix_ = fix;
}

SensorSample SampleFuser::tick(std::int64_t now_ms) {
  auto due = std::stable_partition(pending_.begin(), pending_.end(), [&](const SensorEvent& e) {
    return event_timestamp(e) <= now_ms;
  });
  // Total order, so the result does not depend on arrival order.
  std::sort(pending_.begin(), due, [](const SensorEvent& a, const SensorEvent& b) {
    if (event_timestamp(a) != event_timestamp(b)) return event_timestamp(a) < event_timestamp(b);
    if (a.index() != b.index()) return a.index() < b.index();
    if (const auto* ha = std::get_if<HeartRateReading>(&a)) {
      return ha->bpm < std::get<HeartRateReading>(b).bpm;
    }
    const auto& fa = std::get<GpsFix>(a);
    const auto& fb = std::get<GpsFix>(b);
    return std::tie(fa.lat, fa.lon) < std::tie(fb.lat, fb.lon);
  });
  for (auto it = pending_.begin(); it != due; ++it) apply(*it);
  pending_.erase(pending_.begin(), due);

  SensorSample sample;
  sample.timestamp_ms = now_ms;
  if (hr_ && now_ms - hr_->timestamp_ms <= windows_.hr_ms) sample.hr_bpm = hr_->bpm;
  if (fix_ && now_ms - fix_->timestamp_ms <= windows_.gps_ms) sample.fix = fix_;
  return sample;
}

void SensorQueue::push(SensorEvent event) {
  std::lock_guard lock(mutex_);
  events_.push_back(std::move(event));
}

std::vector<SensorEvent> SensorQueue::drain() {
  std::lock_guard lock(mutex_);
  std::vector<SensorEvent> out;
  out.swap(events_);
  return out;
}

}  // namespace astmon
