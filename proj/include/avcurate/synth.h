// Generative oracles: Gaussian speaker worlds, contamination injection and
// scripted frame streams with known ground truth.
//
// Oracles work in float64. Anything written to pipeline input files is
// downcast to float32 there, like real embedding dumps.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avcurate/backend.h"
#include "avcurate/clustering.h"
#include "avcurate/frames.h"
#include "avcurate/segments.h"
#include "json.hpp"

namespace avcurate {

struct WorldParams {
  std::size_t n_speakers = 50;
  std::size_t n_distractors = 0;  // people who are never a POI
  std::size_t dim = 32;
  Matrix between;  // B*; empty => between_scale * I
  Matrix within;   // W*; empty => within_scale * I
  double between_scale = 1.0;
  double within_scale = 0.1;
  // Rescale the sampled POI means so their empirical covariance equals B*
  // exactly (needs n_speakers > dim and B* positive definite).
  bool exact_between_moments = false;
  std::uint64_t seed = 1;
};

struct SpeakerWorld {
  std::size_t dim = 0;
  Matrix between;
  Matrix within;
  std::vector<std::string> speakers;     // "spk000", ...
  std::vector<Vector> means;             // per speaker
  std::vector<std::string> distractors;  // "dis000", ...
  std::vector<Vector> distractor_means;
  std::uint64_t seed = 0;

  // Mean of a speaker or distractor by id.
  const Vector& mean_of(const std::string& id) const;
};

SpeakerWorld make_world(const WorldParams& p);

// Symmetric PSD square root (eigenvalues clamped at zero).
Matrix psd_sqrt(const Matrix& m);

struct GeneratedEmbeddings {
  LabeledEmbeddingSet set;
  std::vector<std::string> truth;  // true source of each vector
};

// x = m_s + N(0, W*) for `utts_per_speaker` utterances of every speaker.
// Ids are "<speaker>/<video_tag>/<k>".
GeneratedEmbeddings gen_embeddings(const SpeakerWorld& world, std::size_t utts_per_speaker, std::uint64_t seed,
                                   const std::string& video_tag = "syn");

// Utterances of the distractors, the pool foreign utterances come from.
GeneratedEmbeddings gen_distractor_pool(const SpeakerWorld& world, std::size_t utts_per_distractor,
                                        std::uint64_t seed);

struct Injection {
  std::string victim;
  std::vector<std::size_t> pool_items;  // indices into the foreign pool
};

struct ContaminationPlan {
  double rate = 0.0;  // foreign / (own + foreign) per victim
  std::vector<Injection> injections;
};

// Every speaker receives round(n * rate / (1 - rate)) foreign utterances,
// drawn without replacement from the pool. Throws when rate is outside
// [0, 1) or the pool is too small.
ContaminationPlan make_contamination_plan(const LabeledEmbeddingSet& corpus, const GeneratedEmbeddings& pool,
                                          double rate, std::uint64_t seed);

// Relabels the planned pool utterances to their victims. Foreign ids are
// "<victim>/foreign/<k>"; the true source survives only in `truth`.
GeneratedEmbeddings inject_contamination(const GeneratedEmbeddings& corpus, const GeneratedEmbeddings& pool,
                                         const ContaminationPlan& plan);

// Share of vectors whose label equals their true source.
double purity(std::span<const std::string> labels, std::span<const std::string> truth);

// --- scripted frame streams ------------------------------------------------

struct FrameInterval {
  std::uint32_t first = 0;  // inclusive
  std::uint32_t last = 0;   // inclusive
};

struct IdentitySwitch {
  std::uint32_t frame = 0;       // from here to the end of its presence interval
  std::size_t distractor = 0;    // index into StreamScript::distractor_faces
};

struct StreamScript {
  std::uint32_t n_frames = 0;
  Milliseconds frame_ms = 40;
  std::uint32_t bins = 64;
  std::vector<std::uint32_t> cuts;  // first frame of every shot after the first
  double jump = 1.2;                // L1 distance between consecutive shot histograms
  double noise = 0.2;               // max L1 distance between consecutive frames of a shot
  std::vector<FrameInterval> presence;   // POI on screen
  std::vector<IdentitySwitch> switches;  // tracked face becomes someone else
  std::vector<FrameInterval> speaking;   // high sync confidence
  std::vector<double> poi_face;                       // unit vector
  std::vector<std::vector<double>> distractor_faces;  // unit vectors
  double face_noise = 0.03;    // per-component sd added to face embeddings
  bool background_face = true; // a distractor face elsewhere in every frame
  std::uint64_t seed = 1;

  // Throws std::invalid_argument for unordered/overlapping cuts or intervals,
  // switches outside presence, or parameters out of range.
  void validate() const;
};

// Per-frame identity at the POI's screen position: -1 nobody, 0 the POI,
// k + 1 distractor k.
struct StreamTruth {
  std::vector<std::int32_t> identity;
  std::vector<std::uint32_t> cuts;
  std::uint32_t visible_frames() const;
};

// Random-access generator; frame i depends only on (script, i).
class SyntheticStream : public FrameSource {
 public:
  explicit SyntheticStream(StreamScript script);

  FrameFeature frame(std::uint32_t i) const;
  std::optional<FrameFeature> next() override;
  void reset() override { pos_ = 0; }

  const StreamScript& script() const { return script_; }
  std::int32_t identity_at(std::uint32_t i) const;
  StreamTruth truth() const;
  SyncTrace sync_trace(const VideoId& video) const;

 private:
  std::vector<float> shot_base(std::size_t shot) const;
  std::size_t shot_of(std::uint32_t i) const;

  StreamScript script_;
  std::vector<std::vector<float>> bases_;
  std::vector<float> poi_patch_;
  std::vector<float> background_patch_;
  std::uint32_t pos_ = 0;
};

// Random unit vector of the given dim.
std::vector<double> random_unit(std::size_t dim, std::uint64_t seed);

// Unit vector with cosine `similarity` to `face`, leaning towards `other`:
// a face that passes template verification without being the POI.
std::vector<double> lookalike(const std::vector<double>& face, const std::vector<double>& other, double similarity);

struct InterviewParams {
  std::uint32_t n_frames = 2250;
  Milliseconds frame_ms = 40;
  std::uint32_t bins = 64;
  std::uint32_t min_shot = 150;
  std::uint32_t max_shot = 400;
  double presence = 0.8;        // share of each shot the POI is on screen
  double switch_rate = 0.0;     // share of presence intervals with an identity switch
  std::uint32_t switch_offset = 15;  // frames after acquisition the switch happens
  double talk_min_s = 5.0, talk_max_s = 12.0;
  double pause_min_s = 0.2, pause_max_s = 1.5;
  double face_noise = 0.03;
};

// A talk-show style script: shots of random length, the POI on screen for
// the tail `presence` share of each shot, speaking in long runs with short
// pauses, identity switches on a `switch_rate` share of presence intervals
// (chosen exactly, not by coin flip).
StreamScript make_interview_script(const InterviewParams& p, const std::vector<double>& poi_face,
                                   const std::vector<std::vector<double>>& distractor_faces, std::uint64_t seed);

nlohmann::json to_json(const StreamTruth& t);
StreamTruth stream_truth_from_json(const nlohmann::json& j);

// Noisy face crops for template building: `own` crops of the POI plus
// `others` crops of random distractors, normalized, in shuffled order.
std::vector<Embedding> gen_face_crops(const std::vector<double>& poi_face,
                                      const std::vector<std::vector<double>>& distractor_faces, std::size_t own,
                                      std::size_t others, double noise, std::uint64_t seed,
                                      const std::string& id_prefix);

}  // namespace avcurate
