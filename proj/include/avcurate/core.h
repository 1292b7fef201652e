// Shared domain types: identifiers, embeddings and segment records.

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace avcurate {

// All times in the pipeline are integer milliseconds.
using Milliseconds = std::int64_t;

// True for ids usable as file stems and as UtteranceId components.
bool is_valid_id(std::string_view s);

// Opaque, non-empty, filename-safe identifier. The tag keeps speaker and
// video ids from being mixed up.
template <typename Tag>
class StrongId {
 public:
  StrongId() = default;
  explicit StrongId(std::string value);

  const std::string& str() const { return value_; }
  bool empty() const { return value_.empty(); }

  auto operator<=>(const StrongId&) const = default;

 private:
  std::string value_;
};

struct SpeakerTag {};
struct VideoTag {};
using SpeakerId = StrongId<SpeakerTag>;
using VideoId = StrongId<VideoTag>;

extern template class StrongId<SpeakerTag>;
extern template class StrongId<VideoTag>;

// Encodes (speaker, video, index) as "<speaker>/<video>/<index>".
struct UtteranceId {
  SpeakerId speaker;
  VideoId video;
  std::uint32_t index = 0;

  std::string str() const;
  static UtteranceId parse(std::string_view text);

  auto operator<=>(const UtteranceId&) const = default;
};

struct Embedding {
  std::string id;
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }
};

// An embedding file's contents. `dim` is kept separately so an empty set
// still remembers its dimension.
struct EmbeddingSet {
  std::uint32_t dim = 0;
  std::vector<Embedding> items;
};

enum class SegmentSource { kTracked, kDiarizationKept, kDiarizationDropped };

const char* to_string(SegmentSource s);
SegmentSource segment_source_from_string(std::string_view s);

struct SegmentRecord {
  VideoId video;
  SpeakerId speaker;
  std::uint32_t index = 0;  // ordinal within (speaker, video)
  Milliseconds start_ms = 0;
  Milliseconds end_ms = 0;
  SegmentSource source = SegmentSource::kTracked;

  Milliseconds duration_ms() const { return end_ms - start_ms; }
  UtteranceId utterance_id() const { return {speaker, video, index}; }
};

}  // namespace avcurate

template <typename Tag>
struct std::hash<avcurate::StrongId<Tag>> {
  std::size_t operator()(const avcurate::StrongId<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
