// Pipeline configuration: every stage parameter under a dotted key.
//
// A config file is either a JSON object (nested objects flatten to dotted
// keys) or key=value lines, where '#' starts a comment. Values parse as JSON
// when they can ("0.5", "true", "[70, 80]") and as bare strings otherwise.
// `--set key=value` overrides use the same value syntax.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "avcurate/backend.h"
#include "avcurate/clustering.h"
#include "avcurate/segments.h"
#include "avcurate/shots.h"
#include "avcurate/tracker.h"
#include "avcurate/verification.h"
#include "json.hpp"

namespace avcurate {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct QuerySuffixes {
  std::string face = "face";
  std::string photo = "photo";
  std::string interview = "interview";
};

struct ProviderConfig {
  std::size_t images = 20;  // top-N image results per POI
  std::size_t videos = 15;  // top-N video results per POI
  std::map<std::string, QuerySuffixes> queries{{"en", {}}};
};

struct SynthConfig {
  std::size_t speakers = 50;
  std::size_t distractors = 12;
  std::size_t face_dim = 32;
  std::size_t voice_dim = 32;
  std::uint32_t bins = 32;
  std::size_t own_images = 14;    // POI crops among the image results
  std::size_t weak_speakers = 1;  // speakers with only 9 POI crops
  std::size_t videos_per_speaker = 2;
  std::uint32_t frames_per_video = 3000;
  double presence = 0.85;
  double switch_rate = 0.2;
  double between_scale = 1.0;
  double within_scale = 0.25;
  double face_noise = 0.03;
};

struct PipelineConfig {
  TemplateConfig templates;
  ShotConfig shots;
  TrackerConfig track;
  SegmentConfig segments;
  BackendConfig backend;
  double train_fraction = 0.8;
  double clean_eps = 80.0;
  std::size_t clean_min_pts = 3;
  std::vector<double> sweep_eps{70.0, 80.0, 100.0};
  DcfParams dcf;
  std::uint64_t seed = 1;
  std::size_t jobs = 1;
  ProviderConfig provider;
  SynthConfig synth;

  // Sets one dotted key; throws ConfigError for unknown keys or values of
  // the wrong type or outside their range.
  void set(const std::string& key, const nlohmann::json& value);
  // "key=value" form.
  void apply_override(const std::string& assignment);
  // Cross-field checks (e.g. min_len_ms <= max_len_ms).
  void validate() const;
  // Flat object of every key, sorted.
  nlohmann::json to_json() const;
};

// All keys the config accepts (query.<lang>.* shown for "en").
std::vector<std::string> config_keys();

PipelineConfig load_config(const std::filesystem::path& path);
// Parses config text; `origin` names the source in error messages.
void apply_config_text(PipelineConfig& cfg, const std::string& text, const std::string& origin);

}  // namespace avcurate
