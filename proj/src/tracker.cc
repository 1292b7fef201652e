#include "avcurate/tracker.h"

#include <cmath>
#include <stdexcept>
#include <string>

namespace avcurate {

void CostModel::validate() const {
  for (double c : {c_detect, c_track, c_verify}) {
    if (!std::isfinite(c) || c < 0.0) throw std::invalid_argument("costs must be finite and >= 0");
  }
  if (!(c_detect > c_track)) throw std::invalid_argument("cost model needs c_detect > c_track");
}

void TrackerConfig::validate() const {
  if (!std::isfinite(verify_threshold) || verify_threshold < -1.0 || verify_threshold > 1.0) {
    throw std::invalid_argument("verify_threshold must lie in [-1, 1]");
  }
  if (!std::isfinite(drift_threshold) || drift_threshold < 0.0) {
    throw std::invalid_argument("drift_threshold must be >= 0");
  }
  if (frame_ms <= 0) throw std::invalid_argument("frame_ms must be positive");
  cost.validate();
}

const char* to_string(TrackEnd e) {
  switch (e) {
    case TrackEnd::kShotBoundary: return "shot_boundary";
    case TrackEnd::kLost: return "lost";
    case TrackEnd::kDrift: return "drift";
    case TrackEnd::kVerifyFailed: return "verify_failed";
    case TrackEnd::kStreamEnd: return "stream_end";
  }
  return "stream_end";
}

CostReport& CostReport::operator+=(const CostReport& o) {
  frames += o.frames;
  detections += o.detections;
  track_steps += o.track_steps;
  verifications += o.verifications;
  total += o.total;
  return *this;
}

double cosine_similarity(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine_similarity: dim mismatch");
  double ab = 0.0, aa = 0.0, bb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += static_cast<double>(a[k]) * b[k];
    aa += static_cast<double>(a[k]) * a[k];
    bb += static_cast<double>(b[k]) * b[k];
  }
  if (aa == 0.0 || bb == 0.0) return 0.0;
  return ab / std::sqrt(aa * bb);
}

Tracker::Tracker(VideoId video, const TemplateFace& face, TrackerConfig cfg)
    : video_(std::move(video)), cfg_(cfg) {
  cfg_.validate();
  const auto& v = face.vector.values;
  if (v.empty()) throw std::invalid_argument("template face has no values");
  double norm = 0.0;
  for (float x : v) norm += static_cast<double>(x) * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) throw std::invalid_argument("template face is the zero vector");
  template_unit_.resize(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) template_unit_[k] = v[k] / norm;
}

double Tracker::similarity(const std::vector<float>& e) const {
  if (e.size() != template_unit_.size()) {
    throw std::invalid_argument("face embedding dim " + std::to_string(e.size()) +
                                " does not match template dim " + std::to_string(template_unit_.size()));
  }
  double dot = 0.0, nn = 0.0;
  for (std::size_t k = 0; k < e.size(); ++k) {
    dot += template_unit_[k] * e[k];
    nn += static_cast<double>(e[k]) * e[k];
  }
  return nn > 0.0 ? dot / std::sqrt(nn) : 0.0;
}

void Tracker::close(TrackEnd reason) {
  TrackSegment seg;
  seg.video = video_;
  seg.start_frame = state_.track_start_frame;
  seg.end_frame = end_frame_;
  seg.start_ms = start_t_;
  seg.end_ms = end_t_ + cfg_.frame_ms;
  seg.mean_similarity = sim_count_ ? sim_sum_ / sim_count_ : 0.0;
  seg.end_reason = reason;
  segments_.push_back(std::move(seg));
  state_ = TrackState{};
  sim_sum_ = 0.0;
  sim_count_ = 0;
}

void Tracker::detect(const FrameFeature& frame) {
  ++cost_.detections;
  cost_.total += cfg_.cost.c_detect;
  if (!frame.detections) return;
  const FaceObservation* best = nullptr;
  double best_sim = 0.0;
  for (const auto& obs : *frame.detections) {
    const double s = similarity(obs.embedding);
    if (!best || s > best_sim) {
      best = &obs;
      best_sim = s;
    }
  }
  if (!best || best_sim < cfg_.verify_threshold) return;
  state_.status = TrackStatus::kTracking;
  state_.ref_hist = best->patch_hist;
  state_.last_bbox = best->bbox;
  state_.frames_since_verify = 0;
  state_.track_start_frame = frame.index;
  start_t_ = frame.t_ms;
  end_frame_ = frame.index;
  end_t_ = frame.t_ms;
  sim_sum_ = best_sim;
  sim_count_ = 1;
}

void Tracker::step(const FrameFeature& frame, bool shot_start) {
  ++cost_.frames;
  if (state_.status == TrackStatus::kTracking) {
    if (shot_start) {
      close(TrackEnd::kShotBoundary);
    } else {
      ++cost_.track_steps;
      cost_.total += cfg_.cost.c_track;
      const FaceObservation* followed = nullptr;
      double best_overlap = 0.0;
      if (frame.detections) {
        for (const auto& obs : *frame.detections) {
          const double o = iou(obs.bbox, state_.last_bbox);
          if (o > best_overlap) {
            best_overlap = o;
            followed = &obs;
          }
        }
      }
      if (!followed) {
        close(TrackEnd::kLost);
      } else if (bhattacharyya_distance(followed->patch_hist, state_.ref_hist) > cfg_.drift_threshold) {
        close(TrackEnd::kDrift);
      } else {
        state_.last_bbox = followed->bbox;
        bool keep = true;
        if (cfg_.verify_interval > 0 && ++state_.frames_since_verify >= cfg_.verify_interval) {
          ++cost_.verifications;
          cost_.total += cfg_.cost.c_verify;
          state_.frames_since_verify = 0;
          const double s = similarity(followed->embedding);
          if (s < cfg_.verify_threshold) {
            close(TrackEnd::kVerifyFailed);
            keep = false;
          } else {
            sim_sum_ += s;
            ++sim_count_;
          }
        }
        if (keep) {
          end_frame_ = frame.index;
          end_t_ = frame.t_ms;
          return;
        }
      }
    }
  }
  detect(frame);
}

std::vector<TrackSegment> Tracker::finish() {
  if (state_.status == TrackStatus::kTracking) close(TrackEnd::kStreamEnd);
  return segments_;
}

namespace {

void check_shots_tile(std::span<const Shot> shots) {
  for (std::size_t i = 1; i < shots.size(); ++i) {
    if (shots[i].start_frame <= shots[i - 1].end_frame) {
      throw std::invalid_argument("shots must be ordered and disjoint");
    }
  }
}

}  // namespace

TrackResult run_tracker(FrameSource& stream, std::span<const Shot> shots, const TemplateFace& face,
                        const TrackerConfig& cfg, const VideoId& video) {
  check_shots_tile(shots);
  Tracker tracker(video, face, cfg);
  stream.reset();
  std::size_t next_shot = 0;
  while (auto f = stream.next()) {
    bool start = false;
    while (next_shot < shots.size() && shots[next_shot].start_frame <= f->index) {
      start = start || shots[next_shot].start_frame == f->index;
      ++next_shot;
    }
    tracker.step(*f, start);
  }
  TrackResult r;
  r.segments = tracker.finish();
  r.cost = tracker.cost();
  return r;
}

TrackResult run_tracker(std::span<const FrameFeature> stream, std::span<const Shot> shots,
                        const TemplateFace& face, const TrackerConfig& cfg, const VideoId& video) {
  VectorFrameSource src(stream);
  return run_tracker(src, shots, face, cfg, video);
}

SpeedupReport compare_policies(FrameSource& stream, std::span<const Shot> shots, const TemplateFace& face,
                               const TrackerConfig& cfg, const VideoId& video) {
  check_shots_tile(shots);
  Tracker tracker(video, face, cfg);

  // Baseline: every frame pays for detection; the POI is present when any
  // face matches the template.
  std::vector<std::uint32_t> baseline_present;
  SpeedupReport rep;
  stream.reset();
  std::size_t next_shot = 0;
  while (auto f = stream.next()) {
    bool start = false;
    while (next_shot < shots.size() && shots[next_shot].start_frame <= f->index) {
      start = start || shots[next_shot].start_frame == f->index;
      ++next_shot;
    }
    tracker.step(*f, start);

    ++rep.baseline.frames;
    ++rep.baseline.detections;
    rep.baseline.total += cfg.cost.c_detect;
    if (f->detections) {
      for (const auto& obs : *f->detections) {
        if (cosine_similarity(obs.embedding, face.vector.values) >= cfg.verify_threshold) {
          baseline_present.push_back(f->index);
          break;
        }
      }
    }
  }
  rep.segments = tracker.finish();
  rep.tracked = tracker.cost();
  rep.baseline_frames = baseline_present.size();

  std::size_t b = 0;
  for (const auto& seg : rep.segments) {
    rep.tracked_frames += seg.length();
    while (b < baseline_present.size() && baseline_present[b] < seg.start_frame) ++b;
    while (b < baseline_present.size() && baseline_present[b] <= seg.end_frame) {
      ++rep.common_frames;
      ++b;
    }
  }
  const auto uni = rep.tracked_frames + rep.baseline_frames - rep.common_frames;
  rep.frame_agreement = uni == 0 ? 1.0 : static_cast<double>(rep.common_frames) / static_cast<double>(uni);
  rep.cost_ratio = rep.tracked.total > 0.0 ? rep.baseline.total / rep.tracked.total : 0.0;
  return rep;
}

}  // namespace avcurate
