// Verification trials and metrics (EER, normalized minDCF), plus the
// speaker-disjoint train/test evaluation protocol.

#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "avcurate/backend.h"
#include "json.hpp"

namespace avcurate {

enum class TrialLabel { kTarget, kNontarget };
const char* to_string(TrialLabel l);

// Indices into the test set the trial list was built from.
struct Trial {
  std::size_t a = 0;
  std::size_t b = 0;
  TrialLabel label = TrialLabel::kTarget;
};

struct ScoredTrial {
  double score = 0.0;
  TrialLabel label = TrialLabel::kTarget;
};

struct TrialList {
  std::vector<Trial> trials;
  std::size_t speakers_without_targets = 0;  // speakers with a single utterance
  std::size_t utterances_short_of_nontargets = 0;  // pool smaller than target count
};

// For each utterance u (in set order): one target trial per later utterance
// of the same speaker (unordered pairs, each once), then as many non-target
// trials, drawn without replacement from other speakers' utterances.
// Deterministic for a fixed seed. Throws with fewer than two speakers.
TrialList build_trials(const LabeledEmbeddingSet& test, std::uint64_t seed);

// Percent. FAR(t) = share of non-targets scoring >= t, FRR(t) = share of
// targets below t; the crossing is interpolated linearly between adjacent
// operating points.
double compute_eer(std::span<const ScoredTrial> trials);

struct DcfParams {
  double p_target = 0.01;
  double c_miss = 1.0;
  double c_fa = 1.0;

  void validate() const;
};

// Minimum over thresholds of (c_miss p FRR + c_fa (1-p) FAR) divided by
// min(c_miss p, c_fa (1-p)).
double compute_min_dcf(std::span<const ScoredTrial> trials, const DcfParams& params = {});

struct VerificationReport {
  double eer = 0.0;  // percent
  double min_dcf = 0.0;
  std::size_t n_target = 0;
  std::size_t n_nontarget = 0;
  DcfParams dcf;
};

VerificationReport make_report(std::span<const ScoredTrial> trials, const DcfParams& params = {});
nlohmann::json to_json(const VerificationReport& r);

struct SpeakerSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

// Speaker-disjoint split: floor(train_fraction * speakers) speakers train.
// Throws when fewer than two speakers are left for testing.
SpeakerSplit split_speakers(const LabeledEmbeddingSet& corpus, std::uint64_t seed, double train_fraction = 0.8);
LabeledEmbeddingSet select_speakers(const LabeledEmbeddingSet& corpus, std::span<const std::string> speakers);

std::vector<ScoredTrial> score_trials(const Backend& backend, const LabeledEmbeddingSet& test,
                                      std::span<const Trial> trials);

// Text trial list: "utt1 utt2 target|nontarget" per line.
void write_trials(std::ostream& os, const LabeledEmbeddingSet& test, std::span<const Trial> trials);

struct Evaluation {
  VerificationReport report;
  SpeakerSplit split;
  TrialList trials;
  std::vector<ScoredTrial> scores;
  LabeledEmbeddingSet test;
  Backend backend;
};

// Trains a backend on the train side and scores trials on the test side.
Evaluation evaluate_split(const LabeledEmbeddingSet& train, const LabeledEmbeddingSet& test,
                          const BackendConfig& backend_cfg, std::uint64_t trial_seed,
                          const DcfParams& dcf = {});

// Splits by speaker (seeded), then evaluate_split.
Evaluation evaluate_corpus(const LabeledEmbeddingSet& corpus, const BackendConfig& backend_cfg,
                           std::uint64_t split_seed, const DcfParams& dcf = {});

}  // namespace avcurate
