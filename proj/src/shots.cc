#include "avcurate/shots.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace avcurate {

ShotDetector::ShotDetector(ShotConfig cfg) : cfg_(cfg) {
  if (!std::isfinite(cfg_.threshold) || cfg_.threshold < 0.0) {
    throw std::invalid_argument("shot threshold must be finite and >= 0");
  }
  if (cfg_.min_shot_len == 0) throw std::invalid_argument("min_shot_len must be positive");
}

void ShotDetector::push(const FrameFeature& frame) {
  double sum = 0.0;
  for (float v : frame.hist) {
    if (!(v >= 0.0f) || !std::isfinite(v)) {
      throw std::invalid_argument("frame " + std::to_string(frame.index) + ": bad histogram entry");
    }
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("frame " + std::to_string(frame.index) + ": histogram does not sum to 1");
  }

  if (!have_prev_) {
    open_ = {frame.index, frame.index, frame.t_ms, frame.t_ms};
    open_len_ = 1;
  } else {
    if (frame.index <= prev_index_) {
      throw std::invalid_argument("frame indices must be strictly increasing");
    }
    if (frame.hist.size() != prev_hist_.size()) {
      throw std::invalid_argument("histogram bin count changed mid-stream");
    }
    if (open_len_ >= cfg_.min_shot_len && l1_distance(frame.hist, prev_hist_) > cfg_.threshold) {
      open_.end_frame = prev_index_;
      open_.end_ms = prev_t_;
      shots_.push_back(open_);
      open_ = {frame.index, frame.index, frame.t_ms, frame.t_ms};
      open_len_ = 1;
    } else {
      ++open_len_;
    }
  }
  prev_hist_.assign(frame.hist.begin(), frame.hist.end());
  prev_index_ = frame.index;
  prev_t_ = frame.t_ms;
  have_prev_ = true;
}

std::vector<Shot> ShotDetector::finish() {
  if (!have_prev_) return {};
  open_.end_frame = prev_index_;
  open_.end_ms = prev_t_;
  if (open_len_ < cfg_.min_shot_len && !shots_.empty()) {
    shots_.back().end_frame = open_.end_frame;
    shots_.back().end_ms = open_.end_ms;
  } else {
    shots_.push_back(open_);
  }
  std::vector<Shot> out = std::move(shots_);
  *this = ShotDetector(cfg_);
  return out;
}

std::vector<Shot> detect_shots(std::span<const FrameFeature> stream, const ShotConfig& cfg) {
  ShotDetector det(cfg);
  for (const auto& f : stream) det.push(f);
  return det.finish();
}

std::vector<Shot> detect_shots(FrameSource& stream, const ShotConfig& cfg) {
  ShotDetector det(cfg);
  stream.reset();
  while (auto f = stream.next()) det.push(*f);
  return det.finish();
}

bool is_shot_start(std::span<const Shot> shots, std::uint32_t frame) {
  auto it = std::lower_bound(shots.begin(), shots.end(), frame,
                             [](const Shot& s, std::uint32_t f) { return s.start_frame < f; });
  return it != shots.end() && it->start_frame == frame;
}

}  // namespace avcurate
