#include "avcurate/segments.h"

#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "avcurate/binary_io.h"

namespace avcurate {

namespace {
constexpr std::string_view kMagic = "SYN1";
}

void write_sync_trace(const std::filesystem::path& path, const SyncTrace& trace) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string() + " for writing");
  binio::write_magic(os, kMagic);
  binio::write_u32(os, static_cast<std::uint32_t>(trace.confidence.size()));
  for (float v : trace.confidence) {
    if (!std::isfinite(v)) throw FormatError(FormatErrorKind::kNonFinite, "sync confidence");
    binio::write_f32(os, v);
  }
  if (!os) throw FormatError(FormatErrorKind::kIo, "write failed for " + path.string());
}

SyncTrace read_sync_trace(const std::filesystem::path& path, const VideoId& video) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
  binio::expect_magic(is, kMagic, path.string());
  SyncTrace t;
  t.video = video;
  const std::uint32_t n = binio::read_u32(is, "SYN1 count");
  t.confidence.resize(n);
  for (auto& v : t.confidence) {
    v = binio::read_f32(is, "SYN1 confidence");
    if (!std::isfinite(v)) throw FormatError(FormatErrorKind::kNonFinite, path.string());
  }
  return t;
}

void SegmentConfig::validate() const {
  if (!std::isfinite(sync_threshold)) throw std::invalid_argument("sync_threshold must be finite");
  if (frame_ms <= 0) throw std::invalid_argument("frame_ms must be positive");
  if (max_gap_ms < 0) throw std::invalid_argument("max_gap_ms must be >= 0");
  if (min_len_ms <= 0 || max_len_ms < min_len_ms) {
    throw std::invalid_argument("need 0 < min_len_ms <= max_len_ms");
  }
  if (max_len_ms < frame_ms) throw std::invalid_argument("max_len_ms shorter than one frame");
}

std::vector<SegmentRecord> extract_segments(std::span<const TrackSegment> tracks, const SyncTrace& trace,
                                            const SpeakerId& speaker, const SegmentConfig& cfg,
                                            std::uint32_t first_index) {
  cfg.validate();
  struct Run {
    std::uint32_t first, last;  // inclusive frames
  };
  const std::int64_t max_frames = cfg.max_len_ms / cfg.frame_ms;

  std::vector<SegmentRecord> out;
  std::uint32_t next_index = first_index;
  for (const auto& track : tracks) {
    if (track.video != trace.video) {
      throw std::invalid_argument("track of video " + track.video.str() + " paired with trace of " +
                                  trace.video.str());
    }
    if (track.end_frame < track.start_frame || track.end_frame >= trace.confidence.size()) {
      throw std::invalid_argument("track [" + std::to_string(track.start_frame) + ", " +
                                  std::to_string(track.end_frame) + "] outside sync trace of length " +
                                  std::to_string(trace.confidence.size()));
    }
    auto frame_ms_at = [&](std::uint32_t f) {
      return track.start_ms + static_cast<Milliseconds>(f - track.start_frame) * cfg.frame_ms;
    };

    std::vector<Run> runs;
    for (std::uint32_t f = track.start_frame; f <= track.end_frame; ++f) {
      if (trace.confidence[f] < cfg.sync_threshold) continue;
      if (!runs.empty()) {
        const Milliseconds gap = static_cast<Milliseconds>(f - runs.back().last - 1) * cfg.frame_ms;
        if (gap < cfg.max_gap_ms) {
          runs.back().last = f;
          continue;
        }
      }
      runs.push_back({f, f});
    }

    for (const auto& run : runs) {
      const std::int64_t len = run.last - run.first + 1;
      if (len * cfg.frame_ms < cfg.min_len_ms) continue;
      const std::int64_t chunks = (len + max_frames - 1) / max_frames;
      std::uint32_t start = run.first;
      for (std::int64_t c = 0; c < chunks; ++c) {
        const std::int64_t size = len / chunks + (c < len % chunks ? 1 : 0);
        const std::uint32_t stop = start + static_cast<std::uint32_t>(size);  // exclusive
        if (size * cfg.frame_ms >= cfg.min_len_ms) {
          SegmentRecord rec;
          rec.video = track.video;
          rec.speaker = speaker;
          rec.index = next_index++;
          rec.start_ms = frame_ms_at(start);
          rec.end_ms = frame_ms_at(stop);
          rec.source = SegmentSource::kTracked;
          out.push_back(std::move(rec));
        }
        start = stop;
      }
    }
  }
  return out;
}

}  // namespace avcurate
