// Per-frame media features (the abstract "video") and the FRF1 container.
//
// FRF1 layout, little-endian:
//   "FRF1"  u32 bin_count  u32 embedding_dim
//   per frame:
//     u32 index  u32 t_ms  bin_count x f32 (colour histogram)
//     u8 has_detections
//     if has_detections:
//       u8 face_count
//       face_count x { 4 x u32 (x, y, w, h), embedding_dim x f32, bin_count x f32 (patch histogram) }
// Frames run until end of file.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace avcurate {

struct BBox {
  std::uint32_t x = 0, y = 0, w = 0, h = 0;

  bool operator==(const BBox&) const = default;
};

double iou(const BBox& a, const BBox& b);

struct FaceObservation {
  BBox bbox;
  std::vector<float> embedding;
  std::vector<float> patch_hist;
};

struct FrameFeature {
  std::uint32_t index = 0;
  std::uint32_t t_ms = 0;
  std::vector<float> hist;
  // Present only for frames where a detector pass was recorded.
  std::optional<std::vector<FaceObservation>> detections;
};

double l1_distance(std::span<const float> a, std::span<const float> b);

// sqrt(1 - sum_k sqrt(a_k b_k)) for normalized histograms, clamped to [0, 1].
double bhattacharyya_distance(std::span<const float> a, std::span<const float> b);

// Sequential, rewindable access to a frame stream, so long streams never
// have to sit in memory.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::optional<FrameFeature> next() = 0;
  virtual void reset() = 0;
};

class VectorFrameSource : public FrameSource {
 public:
  explicit VectorFrameSource(std::span<const FrameFeature> frames) : frames_(frames) {}
  std::optional<FrameFeature> next() override;
  void reset() override { pos_ = 0; }

 private:
  std::span<const FrameFeature> frames_;
  std::size_t pos_ = 0;
};

class FrameWriter {
 public:
  FrameWriter(const std::filesystem::path& path, std::uint32_t bin_count, std::uint32_t embedding_dim);
  void write(const FrameFeature& frame);
  void close();

 private:
  std::ofstream os_;
  std::filesystem::path path_;
  std::uint32_t bins_;
  std::uint32_t dim_;
};

// Validates each frame as it is read: histogram entries finite and
// non-negative, indices strictly increasing, bbox w/h positive.
class FrameFileSource : public FrameSource {
 public:
  explicit FrameFileSource(const std::filesystem::path& path);
  std::optional<FrameFeature> next() override;
  void reset() override;

  std::uint32_t bin_count() const { return bins_; }
  std::uint32_t embedding_dim() const { return dim_; }

 private:
  void read_header();

  std::filesystem::path path_;
  std::ifstream is_;
  std::uint32_t bins_ = 0;
  std::uint32_t dim_ = 0;
  std::optional<std::uint32_t> last_index_;
};

std::vector<FrameFeature> read_frames(const std::filesystem::path& path);
void write_frames(const std::filesystem::path& path, std::span<const FrameFeature> frames,
                  std::uint32_t embedding_dim);

}  // namespace avcurate
