#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "astmon/session.hpp"
#include "astmon/store.hpp"

namespace astmon {

struct ReplayReport {
  bool identical = false;
  std::size_t rows = 0;
  /// First diverging row or record, human readable.
  std::string divergence;
  std::vector<IntervalRecord> records;
};

/// Re-runs the session engine on the inputs recorded in samples.csv
/// (heart rate and fix columns), steering it with the commands implied by
/// the phase/interval columns. Every re-derived row must match the stored
/// row byte for byte and the re-derived records must equal intervals.json.
/// Throws StoreError when plan.json or intervals.json cannot be read.
ReplayReport replay_session(const std::filesystem::path& dir);

}  // namespace astmon
