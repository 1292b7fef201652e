// Detect-once-then-track scheduling for a single person of interest, and
// the cost model used to compare it against detecting on every frame.
//
// Idle frames run the detector and compare every face with the template
// face. A match (cosine >= verify_threshold) opens a track. Tracked frames
// follow the face whose box overlaps the last box most and end the track on
// a shot boundary, a lost box, histogram drift (Bhattacharyya distance to
// the acquisition patch > drift_threshold), or a failed periodic
// re-verification. When a track ends on frame i the segment closes at i-1
// and the detector runs on frame i itself.

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "avcurate/clustering.h"
#include "avcurate/core.h"
#include "avcurate/frames.h"
#include "avcurate/shots.h"

namespace avcurate {

// Abstract cost units per per-frame operation.
struct CostModel {
  double c_detect = 8.0;
  double c_track = 1.0;
  double c_verify = 1.0;

  void validate() const;
};

struct TrackerConfig {
  double verify_threshold = 0.6;  // cosine similarity to the template
  double drift_threshold = 0.35;  // Bhattacharyya distance
  std::uint32_t verify_interval = 25;  // tracked frames between checks; 0 = never
  Milliseconds frame_ms = 40;
  CostModel cost;

  void validate() const;
};

enum class TrackEnd { kShotBoundary, kLost, kDrift, kVerifyFailed, kStreamEnd };
const char* to_string(TrackEnd e);

struct TrackSegment {
  VideoId video;
  std::uint32_t start_frame = 0;  // inclusive
  std::uint32_t end_frame = 0;    // inclusive
  Milliseconds start_ms = 0;      // timestamp of start_frame
  Milliseconds end_ms = 0;        // timestamp of end_frame + frame_ms
  double mean_similarity = 0.0;   // over acquisition and re-verifications
  TrackEnd end_reason = TrackEnd::kStreamEnd;

  std::uint32_t length() const { return end_frame - start_frame + 1; }
};

struct CostReport {
  std::uint64_t frames = 0;
  std::uint64_t detections = 0;
  std::uint64_t track_steps = 0;
  std::uint64_t verifications = 0;
  double total = 0.0;

  CostReport& operator+=(const CostReport& o);
};

enum class TrackStatus { kIdle, kTracking };

struct TrackState {
  TrackStatus status = TrackStatus::kIdle;
  std::vector<float> ref_hist;  // non-empty iff tracking
  BBox last_bbox;
  std::uint32_t frames_since_verify = 0;
  std::uint32_t track_start_frame = 0;
};

class Tracker {
 public:
  Tracker(VideoId video, const TemplateFace& face, TrackerConfig cfg);

  void step(const FrameFeature& frame, bool shot_start);
  // Closes any open track and returns every segment emitted so far.
  std::vector<TrackSegment> finish();

  const CostReport& cost() const { return cost_; }
  const TrackState& state() const { return state_; }

 private:
  void detect(const FrameFeature& frame);
  void close(TrackEnd reason);
  double similarity(const std::vector<float>& embedding) const;

  VideoId video_;
  std::vector<double> template_unit_;
  TrackerConfig cfg_;
  TrackState state_;
  CostReport cost_;
  std::vector<TrackSegment> segments_;
  std::uint32_t end_frame_ = 0;
  Milliseconds end_t_ = 0;
  Milliseconds start_t_ = 0;
  double sim_sum_ = 0.0;
  std::uint32_t sim_count_ = 0;
};

struct TrackResult {
  std::vector<TrackSegment> segments;
  CostReport cost;
};

TrackResult run_tracker(FrameSource& stream, std::span<const Shot> shots, const TemplateFace& face,
                        const TrackerConfig& cfg, const VideoId& video);
TrackResult run_tracker(std::span<const FrameFeature> stream, std::span<const Shot> shots,
                        const TemplateFace& face, const TrackerConfig& cfg, const VideoId& video);

struct SpeedupReport {
  CostReport tracked;
  CostReport baseline;
  double cost_ratio = 0.0;        // baseline / tracked
  double frame_agreement = 0.0;   // IoU of POI-present frame sets
  std::uint64_t tracked_frames = 0;
  std::uint64_t baseline_frames = 0;
  std::uint64_t common_frames = 0;
  std::vector<TrackSegment> segments;
};

// Runs the tracker and a detect-every-frame baseline over the same frames
// in one pass.
SpeedupReport compare_policies(FrameSource& stream, std::span<const Shot> shots, const TemplateFace& face,
                               const TrackerConfig& cfg, const VideoId& video);

double cosine_similarity(std::span<const float> a, std::span<const float> b);

}  // namespace avcurate
