#include "avcurate/manifest.h"

#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_set>

#include "avcurate/binary_io.h"

namespace avcurate {

using nlohmann::json;

void CorpusManifest::validate() const {
  std::unordered_set<SpeakerId> known;
  for (const auto& s : speakers) {
    if (s.id.empty()) throw std::invalid_argument("speaker with empty id");
    if (!known.insert(s.id).second) {
      throw std::invalid_argument("duplicate speaker '" + s.id.str() + "'");
    }
  }
  std::set<UtteranceId> utts;
  for (const auto& seg : segments) {
    if (!known.contains(seg.speaker)) {
      throw std::invalid_argument("segment speaker '" + seg.speaker.str() + "' not in speakers");
    }
    if (seg.start_ms < 0 || seg.start_ms >= seg.end_ms) {
      throw std::invalid_argument("segment " + seg.utterance_id().str() + " has bad times");
    }
    if (!utts.insert(seg.utterance_id()).second) {
      throw std::invalid_argument("duplicate utterance " + seg.utterance_id().str());
    }
  }
}

json to_json(const CorpusManifest& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["speakers"] = json::array();
  for (const auto& s : m.speakers) {
    j["speakers"].push_back({{"id", s.id.str()}, {"name", s.name}, {"nationality", s.nationality}});
  }
  j["segments"] = json::array();
  for (const auto& seg : m.segments) {
    j["segments"].push_back({{"utt", seg.utterance_id().str()},
                             {"video", seg.video.str()},
                             {"speaker", seg.speaker.str()},
                             {"index", seg.index},
                             {"start_ms", seg.start_ms},
                             {"end_ms", seg.end_ms},
                             {"source", to_string(seg.source)}});
  }
  j["embedding_files"] = m.embedding_files;
  return j;
}

namespace {

void check_keys(const json& obj, std::initializer_list<const char*> allowed, const char* where) {
  if (!obj.is_object()) {
    throw FormatError(FormatErrorKind::kInvalidValue, std::string(where) + " must be an object");
  }
  for (const auto& [key, _] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) {
      throw FormatError(FormatErrorKind::kInvalidValue,
                        std::string("unknown key '") + key + "' in " + where);
    }
  }
}

}  // namespace

CorpusManifest manifest_from_json(const json& j) {
  try {
    check_keys(j, {"schema_version", "speakers", "segments", "embedding_files"}, "manifest");
    CorpusManifest m;
    m.schema_version = j.at("schema_version").get<int>();
    if (m.schema_version != kManifestSchemaVersion) {
      throw FormatError(FormatErrorKind::kInvalidValue,
                        "unsupported manifest schema_version " + std::to_string(m.schema_version));
    }
    for (const auto& s : j.at("speakers")) {
      check_keys(s, {"id", "name", "nationality"}, "speaker");
      m.speakers.push_back({SpeakerId(s.at("id").get<std::string>()),
                            s.value("name", std::string()), s.value("nationality", std::string())});
    }
    for (const auto& s : j.at("segments")) {
      check_keys(s, {"utt", "video", "speaker", "index", "start_ms", "end_ms", "source"}, "segment");
      SegmentRecord seg;
      seg.video = VideoId(s.at("video").get<std::string>());
      seg.speaker = SpeakerId(s.at("speaker").get<std::string>());
      seg.index = s.at("index").get<std::uint32_t>();
      seg.start_ms = s.at("start_ms").get<Milliseconds>();
      seg.end_ms = s.at("end_ms").get<Milliseconds>();
      seg.source = segment_source_from_string(s.value("source", std::string("tracked")));
      if (s.contains("utt") && s["utt"].get<std::string>() != seg.utterance_id().str()) {
        throw FormatError(FormatErrorKind::kInvalidValue,
                          "segment utt '" + s["utt"].get<std::string>() +
                              "' disagrees with its speaker/video/index");
      }
      m.segments.push_back(std::move(seg));
    }
    if (j.contains("embedding_files")) {
      m.embedding_files = j["embedding_files"].get<std::vector<std::string>>();
    }
    m.validate();
    return m;
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError(FormatErrorKind::kInvalidValue, std::string("manifest: ") + e.what());
  }
}

CorpusManifest load_manifest(const std::filesystem::path& path, const std::filesystem::path& root) {
  std::ifstream is(path);
  if (!is) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(is);
  } catch (const json::parse_error& e) {
    throw FormatError(FormatErrorKind::kInvalidValue, path.string() + ": " + e.what());
  }
  CorpusManifest m = manifest_from_json(j);
  for (const auto& f : m.embedding_files) {
    if (!std::filesystem::exists(root / f)) {
      throw FormatError(FormatErrorKind::kIo, "manifest references missing file " + f);
    }
  }
  return m;
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& m) {
  m.validate();
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw FormatError(FormatErrorKind::kIo, "cannot write " + path.string());
  os << to_json(m).dump(2) << "\n";
}

StatisticsReport corpus_statistics(const CorpusManifest& m) {
  StatisticsReport r;
  r.n_poi = m.speakers.size();
  for (const auto& s : m.speakers) ++r.poi_per_nationality[s.nationality];

  std::unordered_set<SpeakerId> active;
  for (const auto& seg : m.segments) {
    ++r.total_utterances;
    r.total_ms += seg.duration_ms();
    active.insert(seg.speaker);
  }
  r.n_poi_with_utterances = active.size();
  if (r.n_poi_with_utterances > 0) {
    r.mean_utterances_per_poi =
        static_cast<double>(r.total_utterances) / static_cast<double>(r.n_poi_with_utterances);
  }
  if (r.total_utterances > 0) {
    r.mean_duration_s = static_cast<double>(r.total_ms) / 1000.0 / static_cast<double>(r.total_utterances);
  }
  r.total_hours = static_cast<double>(r.total_ms) / 3.6e6;
  return r;
}

json to_json(const StatisticsReport& r) {
  json j;
  j["poi_per_nationality"] = r.poi_per_nationality;
  j["n_poi"] = r.n_poi;
  j["n_poi_with_utterances"] = r.n_poi_with_utterances;
  j["total_utterances"] = r.total_utterances;
  j["mean_utterances_per_poi"] = r.mean_utterances_per_poi;
  j["mean_duration_s"] = r.mean_duration_s;
  j["total_ms"] = r.total_ms;
  j["total_hours"] = r.total_hours;
  return j;
}

std::string format_statistics_table(const StatisticsReport& r) {
  std::vector<std::pair<std::string, std::string>> rows;
  auto fixed = [](double v, int prec) {
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(prec) << v;
    return ss.str();
  };
  for (const auto& [nat, n] : r.poi_per_nationality) {
    rows.emplace_back("# of " + (nat.empty() ? std::string("unknown") : nat) + " POI", std::to_string(n));
  }
  rows.emplace_back("# POI", std::to_string(r.n_poi));
  rows.emplace_back("# POI with utterances", std::to_string(r.n_poi_with_utterances));
  rows.emplace_back("Average # of utterances per POI", fixed(r.mean_utterances_per_poi, 1));
  rows.emplace_back("Average duration per utterance", fixed(r.mean_duration_s, 1) + " sec");
  rows.emplace_back("# total of utterances", std::to_string(r.total_utterances));
  rows.emplace_back("# total audio hours", fixed(r.total_hours, 1));

  std::size_t w = 0;
  for (const auto& row : rows) w = std::max(w, row.first.size());
  std::ostringstream out;
  for (const auto& [k, v] : rows) {
    out << std::left << std::setw(static_cast<int>(w)) << k << " | " << v << "\n";
  }
  return out.str();
}

}  // namespace avcurate
