// Media providers: search by name plus a localized query suffix, fetch a
// result into local feature files. Only the offline mock is implemented.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "avcurate/config.h"
#include "avcurate/manifest.h"
#include "avcurate/synth.h"

namespace avcurate {

enum class MediaKind { kImage, kVideo };

struct FetchedMedia {
  MediaKind kind = MediaKind::kImage;
  std::vector<std::filesystem::path> files;  // image: one .emb; video: .frf then .syn
};

class MediaProvider {
 public:
  virtual ~MediaProvider() = default;
  // Result ids, best first, at most `limit`.
  virtual std::vector<std::string> search(const std::string& name, const std::string& suffix,
                                          std::size_t limit) const = 0;
  // Materializes the result under `media_dir` and returns its files.
  virtual FetchedMedia fetch(const std::string& id, const std::filesystem::path& media_dir) const = 0;
};

// Language tag used for a nationality's queries ("en" when unknown).
std::string language_for(const std::string& nationality);

// Suffixes for a nationality, falling back to "en".
const QuerySuffixes& suffixes_for(const ProviderConfig& cfg, const std::string& nationality);

// A complete synthetic world: POI and distractor faces, voices, and the
// scripts of every interview video. Everything derives from (cfg, seed).
class MockWorld {
 public:
  MockWorld(const SynthConfig& cfg, std::uint64_t seed);

  const SynthConfig& config() const { return cfg_; }
  std::uint64_t seed() const { return seed_; }
  const std::vector<SpeakerInfo>& speakers() const { return speakers_; }
  const SpeakerWorld& voices() const { return voices_; }

  // -1 when the name is not a POI of this world.
  std::ptrdiff_t speaker_index(const std::string& name) const;
  std::size_t own_images(std::size_t speaker) const;
  std::vector<Embedding> image(std::size_t speaker, std::size_t k, std::size_t total) const;
  StreamScript video_script(std::size_t speaker, std::size_t k) const;
  static std::string video_id(const SpeakerInfo& s, std::size_t k);

  // Voice embedding of a segment whose frames show `identity` (see
  // StreamTruth), drawn deterministically from the utterance id.
  Vector voice(const std::string& speaker, std::int32_t identity, const std::string& utterance) const;

 private:
  SynthConfig cfg_;
  std::uint64_t seed_;
  std::vector<SpeakerInfo> speakers_;
  std::vector<std::vector<double>> faces_;
  std::vector<std::vector<double>> distractor_faces_;
  SpeakerWorld voices_;
};

// Search results: "<speaker>-img-NN" for face/photo suffixes,
// "<speaker>-vNN" for interview suffixes. Fetched videos also leave a
// ground-truth sidecar in `truth_dir`, which no stage reads.
class MockProvider : public MediaProvider {
 public:
  MockProvider(const MockWorld& world, const ProviderConfig& cfg, std::filesystem::path truth_dir);

  std::vector<std::string> search(const std::string& name, const std::string& suffix,
                                  std::size_t limit) const override;
  FetchedMedia fetch(const std::string& id, const std::filesystem::path& media_dir) const override;

 private:
  const MockWorld& world_;
  ProviderConfig cfg_;
  std::filesystem::path truth_dir_;
};

// FNV-1a; stable across platforms, used to derive per-item seeds.
std::uint64_t stable_hash(std::string_view s);

}  // namespace avcurate
