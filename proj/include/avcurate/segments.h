// Speech segments from per-frame audio-visual sync confidence inside tracks.
//
// SYN1 layout, little-endian: "SYN1"  u32 count  count x f32.

#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "avcurate/core.h"
#include "avcurate/tracker.h"

namespace avcurate {

struct SyncTrace {
  VideoId video;
  std::vector<float> confidence;  // indexed by frame number
};

void write_sync_trace(const std::filesystem::path& path, const SyncTrace& trace);
SyncTrace read_sync_trace(const std::filesystem::path& path, const VideoId& video);

struct SegmentConfig {
  double sync_threshold = 0.5;
  Milliseconds max_gap_ms = 500;
  Milliseconds min_len_ms = 4000;
  Milliseconds max_len_ms = 20000;
  Milliseconds frame_ms = 40;

  void validate() const;
};

// Within each track, frames with confidence >= sync_threshold form runs.
// Runs whose gap is shorter than max_gap_ms merge. Merged runs shorter than
// min_len_ms drop; longer than max_len_ms split into the fewest equal chunks
// (frame granularity) that fit, and chunks below min_len_ms drop.
// Records come back ordered, with index counting from `first_index`.
std::vector<SegmentRecord> extract_segments(std::span<const TrackSegment> tracks, const SyncTrace& trace,
                                            const SpeakerId& speaker, const SegmentConfig& cfg = {},
                                            std::uint32_t first_index = 0);

}  // namespace avcurate
