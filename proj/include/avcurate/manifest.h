// Corpus manifest (JSON) and dataset statistics.
//
// manifest.json, schema_version 1:
//   {
//     "schema_version": 1,
//     "speakers": [ {"id": "spk001", "name": "...", "nationality": "ko"} ],
//     "segments": [ {"utt": "spk001/vid0001/0", "video": "vid0001", "speaker": "spk001",
//                    "index": 0, "start_ms": 1200, "end_ms": 9800, "source": "tracked"} ],
//     "embedding_files": ["xvectors/xvectors.emb"]
//   }
// Embedding file paths are relative to the corpus root. "utt" is redundant with
// (speaker, video, index) and must agree with it.

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "avcurate/core.h"
#include "json.hpp"

namespace avcurate {

inline constexpr int kManifestSchemaVersion = 1;

struct SpeakerInfo {
  SpeakerId id;
  std::string name;
  std::string nationality;
};

struct CorpusManifest {
  int schema_version = kManifestSchemaVersion;
  std::vector<SpeakerInfo> speakers;
  std::vector<SegmentRecord> segments;
  std::vector<std::string> embedding_files;

  // Throws std::invalid_argument on duplicate speakers or utterances, unknown
  // segment speakers, or bad segment times.
  void validate() const;
};

nlohmann::json to_json(const CorpusManifest& m);
CorpusManifest manifest_from_json(const nlohmann::json& j);

// Loads, validates and checks that every referenced embedding file exists
// under `root`. Schema problems surface as FormatError(kInvalidValue).
CorpusManifest load_manifest(const std::filesystem::path& path, const std::filesystem::path& root);
void save_manifest(const std::filesystem::path& path, const CorpusManifest& m);

struct StatisticsReport {
  std::map<std::string, std::size_t> poi_per_nationality;
  std::size_t n_poi = 0;
  std::size_t n_poi_with_utterances = 0;
  std::size_t total_utterances = 0;
  double mean_utterances_per_poi = 0.0;  // over POI with at least one utterance
  double mean_duration_s = 0.0;
  Milliseconds total_ms = 0;
  double total_hours = 0.0;
};

StatisticsReport corpus_statistics(const CorpusManifest& m);
nlohmann::json to_json(const StatisticsReport& r);
std::string format_statistics_table(const StatisticsReport& r);

}  // namespace avcurate
