// Colour-histogram shot boundary detection.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avcurate/core.h"
#include "avcurate/frames.h"

namespace avcurate {

// Default layout of real frame histograms: 16 hue x 16 saturation x 8 value.
inline constexpr std::uint32_t kDefaultHsvBins = 16 * 16 * 8;

struct Shot {
  std::uint32_t start_frame = 0;  // inclusive
  std::uint32_t end_frame = 0;    // inclusive
  Milliseconds start_ms = 0;      // timestamp of start_frame
  Milliseconds end_ms = 0;        // timestamp of end_frame

  bool operator==(const Shot&) const = default;
};

struct ShotConfig {
  double threshold = 0.4;          // L1 distance between consecutive histograms
  std::uint32_t min_shot_len = 12;  // frames
};

// Single-pass detector with O(bins) state. A boundary opens at frame i when
// L1(hist[i], hist[i-1]) > threshold and the open shot already holds at
// least min_shot_len frames. finish() folds a final shot shorter than
// min_shot_len into its predecessor, so every shot but a lone one meets the
// minimum.
class ShotDetector {
 public:
  explicit ShotDetector(ShotConfig cfg = {});

  void push(const FrameFeature& frame);
  std::vector<Shot> finish();

 private:
  ShotConfig cfg_;
  std::vector<float> prev_hist_;
  bool have_prev_ = false;
  std::uint32_t prev_index_ = 0;
  Milliseconds prev_t_ = 0;
  std::uint32_t open_len_ = 0;
  Shot open_{};
  std::vector<Shot> shots_;
};

// Empty input yields an empty list.
std::vector<Shot> detect_shots(std::span<const FrameFeature> stream, const ShotConfig& cfg = {});
std::vector<Shot> detect_shots(FrameSource& stream, const ShotConfig& cfg = {});

// True when some shot starts at `frame`. `shots` is ordered.
bool is_shot_start(std::span<const Shot> shots, std::uint32_t frame);

}  // namespace avcurate
