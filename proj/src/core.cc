#include "avcurate/core.h"

#include <charconv>
#include <stdexcept>

namespace avcurate {

bool is_valid_id(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
                    (c >= '0' && c <= '9') || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  // "." and ".." would escape the corpus root when used as file stems.
  return s != "." && s != "..";
}

template <typename Tag>
StrongId<Tag>::StrongId(std::string value) : value_(std::move(value)) {
  if (!is_valid_id(value_)) {
    throw std::invalid_argument("invalid id '" + value_ + "' (want [A-Za-z0-9_.-]+)");
  }
}

template class StrongId<SpeakerTag>;
template class StrongId<VideoTag>;

std::string UtteranceId::str() const {
  return speaker.str() + "/" + video.str() + "/" + std::to_string(index);
}

UtteranceId UtteranceId::parse(std::string_view text) {
  const auto first = text.find('/');
  const auto last = text.rfind('/');
  if (first == std::string_view::npos || first == last) {
    throw std::invalid_argument("malformed utterance id '" + std::string(text) + "'");
  }
  UtteranceId id;
  id.speaker = SpeakerId(std::string(text.substr(0, first)));
  id.video = VideoId(std::string(text.substr(first + 1, last - first - 1)));
  const auto digits = text.substr(last + 1);
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), id.index);
  if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw std::invalid_argument("malformed utterance index in '" + std::string(text) + "'");
  }
  return id;
}

const char* to_string(SegmentSource s) {
  switch (s) {
    case SegmentSource::kTracked: return "tracked";
    case SegmentSource::kDiarizationKept: return "diarization_kept";
    case SegmentSource::kDiarizationDropped: return "diarization_dropped";
  }
  return "tracked";
}

SegmentSource segment_source_from_string(std::string_view s) {
  if (s == "tracked") return SegmentSource::kTracked;
  if (s == "diarization_kept") return SegmentSource::kDiarizationKept;
  if (s == "diarization_dropped") return SegmentSource::kDiarizationDropped;
  throw std::invalid_argument("unknown segment source '" + std::string(s) + "'");
}

}  // namespace avcurate
