#include "avcurate/frames.h"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "avcurate/binary_io.h"

namespace avcurate {

namespace {
constexpr std::string_view kMagic = "FRF1";
}

double iou(const BBox& a, const BBox& b) {
  const double ax1 = a.x, ay1 = a.y, ax2 = a.x + static_cast<double>(a.w), ay2 = a.y + static_cast<double>(a.h);
  const double bx1 = b.x, by1 = b.y, bx2 = b.x + static_cast<double>(b.w), by2 = b.y + static_cast<double>(b.h);
  const double iw = std::max(0.0, std::min(ax2, bx2) - std::max(ax1, bx1));
  const double ih = std::max(0.0, std::min(ay2, by2) - std::max(ay1, by1));
  const double inter = iw * ih;
  const double uni = static_cast<double>(a.w) * a.h + static_cast<double>(b.w) * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double l1_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("l1_distance: histogram sizes differ");
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += std::abs(static_cast<double>(a[k]) - b[k]);
  return s;
}

double bhattacharyya_distance(std::span<const float> a, std::span<const float> b) {
  if (a.size() != b.size()) throw std::invalid_argument("bhattacharyya: histogram sizes differ");
  double bc = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    bc += std::sqrt(std::max(0.0, static_cast<double>(a[k])) * std::max(0.0, static_cast<double>(b[k])));
  }
  return std::sqrt(std::clamp(1.0 - bc, 0.0, 1.0));
}

std::optional<FrameFeature> VectorFrameSource::next() {
  if (pos_ >= frames_.size()) return std::nullopt;
  return frames_[pos_++];
}

FrameWriter::FrameWriter(const std::filesystem::path& path, std::uint32_t bin_count,
                         std::uint32_t embedding_dim)
    : os_(path, std::ios::binary | std::ios::trunc), path_(path), bins_(bin_count), dim_(embedding_dim) {
  if (!os_) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string() + " for writing");
  if (bins_ == 0) throw FormatError(FormatErrorKind::kInvalidValue, "FRF1 bin_count must be positive");
  binio::write_magic(os_, kMagic);
  binio::write_u32(os_, bins_);
  binio::write_u32(os_, dim_);
}

void FrameWriter::write(const FrameFeature& f) {
  if (f.hist.size() != bins_) {
    throw FormatError(FormatErrorKind::kDimMismatch, "frame histogram has wrong bin count");
  }
  binio::write_u32(os_, f.index);
  binio::write_u32(os_, f.t_ms);
  for (float v : f.hist) binio::write_f32(os_, v);
  binio::write_u8(os_, f.detections ? 1 : 0);
  if (!f.detections) return;
  if (f.detections->size() > 255) {
    throw FormatError(FormatErrorKind::kInvalidValue, "FRF1 allows at most 255 faces per frame");
  }
  binio::write_u8(os_, static_cast<std::uint8_t>(f.detections->size()));
  for (const auto& obs : *f.detections) {
    if (obs.embedding.size() != dim_ || obs.patch_hist.size() != bins_) {
      throw FormatError(FormatErrorKind::kDimMismatch, "face observation has wrong dimensions");
    }
    binio::write_u32(os_, obs.bbox.x);
    binio::write_u32(os_, obs.bbox.y);
    binio::write_u32(os_, obs.bbox.w);
    binio::write_u32(os_, obs.bbox.h);
    for (float v : obs.embedding) binio::write_f32(os_, v);
    for (float v : obs.patch_hist) binio::write_f32(os_, v);
  }
}

void FrameWriter::close() {
  os_.flush();
  if (!os_) throw FormatError(FormatErrorKind::kIo, "write failed for " + path_.string());
  os_.close();
}

FrameFileSource::FrameFileSource(const std::filesystem::path& path) : path_(path) {
  is_.open(path, std::ios::binary);
  if (!is_) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
  read_header();
}

void FrameFileSource::read_header() {
  binio::expect_magic(is_, kMagic, path_.string());
  bins_ = binio::read_u32(is_, "FRF1 bin_count");
  dim_ = binio::read_u32(is_, "FRF1 embedding_dim");
  if (bins_ == 0) throw FormatError(FormatErrorKind::kDimMismatch, path_.string() + ": bin_count is 0");
  last_index_.reset();
}

void FrameFileSource::reset() {
  is_.clear();
  is_.seekg(0);
  read_header();
}

namespace {

void read_hist(std::istream& is, std::vector<float>& out, std::uint32_t n, const char* what) {
  out.resize(n);
  for (auto& v : out) {
    v = binio::read_f32(is, what);
    if (!std::isfinite(v)) throw FormatError(FormatErrorKind::kNonFinite, what);
    if (v < 0.0f) throw FormatError(FormatErrorKind::kInvalidValue, std::string(what) + " has a negative bin");
  }
}

}  // namespace

std::optional<FrameFeature> FrameFileSource::next() {
  if (binio::at_eof(is_)) return std::nullopt;
  FrameFeature f;
  f.index = binio::read_u32(is_, "frame index");
  f.t_ms = binio::read_u32(is_, "frame t_ms");
  if (last_index_ && f.index <= *last_index_) {
    throw FormatError(FormatErrorKind::kInvalidValue,
                      path_.string() + ": frame indices not strictly increasing at " + std::to_string(f.index));
  }
  last_index_ = f.index;
  read_hist(is_, f.hist, bins_, "frame histogram");
  const std::uint8_t has = binio::read_u8(is_, "detection flag");
  if (has > 1) throw FormatError(FormatErrorKind::kInvalidValue, "detection flag must be 0 or 1");
  if (has) {
    const std::uint8_t count = binio::read_u8(is_, "face count");
    std::vector<FaceObservation> faces(count);
    for (auto& obs : faces) {
      obs.bbox.x = binio::read_u32(is_, "bbox");
      obs.bbox.y = binio::read_u32(is_, "bbox");
      obs.bbox.w = binio::read_u32(is_, "bbox");
      obs.bbox.h = binio::read_u32(is_, "bbox");
      if (obs.bbox.w == 0 || obs.bbox.h == 0) {
        throw FormatError(FormatErrorKind::kInvalidValue, "face bbox with zero extent");
      }
      obs.embedding.resize(dim_);
      for (auto& v : obs.embedding) {
        v = binio::read_f32(is_, "face embedding");
        if (!std::isfinite(v)) throw FormatError(FormatErrorKind::kNonFinite, "face embedding");
      }
      read_hist(is_, obs.patch_hist, bins_, "patch histogram");
    }
    f.detections = std::move(faces);
  }
  return f;
}

std::vector<FrameFeature> read_frames(const std::filesystem::path& path) {
  FrameFileSource src(path);
  std::vector<FrameFeature> out;
  while (auto f = src.next()) out.push_back(std::move(*f));
  return out;
}

void write_frames(const std::filesystem::path& path, std::span<const FrameFeature> frames,
                  std::uint32_t embedding_dim) {
  if (frames.empty()) throw FormatError(FormatErrorKind::kInvalidValue, "cannot write an empty stream");
  FrameWriter w(path, static_cast<std::uint32_t>(frames.front().hist.size()), embedding_dim);
  for (const auto& f : frames) w.write(f);
  w.close();
}

}  // namespace avcurate
