// Per-speaker cleaning: DBSCAN over PLDA-derived distances, keeping the
// largest cluster as the speaker's own utterances.

#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "avcurate/backend.h"
#include "avcurate/clustering.h"
#include "avcurate/verification.h"
#include "json.hpp"

namespace avcurate {

// d[i][j] = s_max - s(i, j), where s_max is the largest PLDA score over all
// pairs of this speaker. Inputs are preprocessed vectors. nullopt for fewer
// than two vectors.
std::optional<DistanceMatrix> plda_distance_matrix(const PldaModel& model, std::span<const Vector> xs);

struct CleaningReport {
  std::string speaker;
  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  double vsr = 1.0;  // kept / (kept + dropped)
  double eps = 0.0;
  std::size_t min_pts = 0;
  bool passthrough = false;  // too few utterances to cluster; all kept
  bool degenerate = false;   // DBSCAN found only noise; all kept
};

// `xs` are preprocessed vectors of one speaker, `ids` their utterance ids.
CleaningReport clean_speaker(const PldaModel& model, const std::string& speaker, std::span<const std::string> ids,
                             std::span<const Vector> xs, double eps, std::size_t min_pts);

struct CleanedCorpus {
  LabeledEmbeddingSet kept;  // raw vectors of kept utterances, original order
  std::vector<CleaningReport> reports;  // one per speaker, first-appearance order
  double mean_vsr = 1.0;
};

// Cleans every speaker of a raw corpus with one backend; speakers run in
// parallel on up to `jobs` threads.
CleanedCorpus clean_corpus(const Backend& backend, const LabeledEmbeddingSet& corpus, double eps,
                           std::size_t min_pts, std::size_t jobs = 1);

struct SweepRow {
  double eps = 0.0;
  double mean_vsr = 0.0;
  std::size_t kept = 0;
  std::size_t total = 0;
  std::size_t degenerate_speakers = 0;
  std::optional<VerificationReport> verification;
};

using SweepEvaluator = std::function<VerificationReport(const CleanedCorpus&)>;

// One row per eps, in the given order. With an evaluator each row also gets
// the verification metrics of its cleaned corpus. Rejects an empty list.
std::vector<SweepRow> eps_sweep(const Backend& backend, const LabeledEmbeddingSet& corpus,
                                std::span<const double> eps_list, std::size_t min_pts,
                                const SweepEvaluator& evaluate = {}, std::size_t jobs = 1);

struct CleaningStudy {
  Evaluation before;
  std::vector<SweepRow> rows;
};

// Before/after protocol: split by speaker, score the raw corpus, clean every
// speaker with the raw-trained backend, then retrain and rescore on the
// cleaned corpus using the same speaker split, for each eps.
CleaningStudy run_cleaning_study(const LabeledEmbeddingSet& corpus, std::span<const double> eps_list,
                                 std::size_t min_pts, const BackendConfig& backend_cfg, std::uint64_t seed,
                                 const DcfParams& dcf = {}, std::size_t jobs = 1);

nlohmann::json to_json(const CleaningReport& r);
nlohmann::json to_json(const SweepRow& r);
// Aligned text table: eps | VSR | EER% | MinDCF.
std::string format_sweep_table(std::span<const SweepRow> rows, const std::optional<VerificationReport>& before = {});

}  // namespace avcurate
