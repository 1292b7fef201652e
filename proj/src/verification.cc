#include "avcurate/verification.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>
#include <unordered_map>

namespace avcurate {

const char* to_string(TrialLabel l) { return l == TrialLabel::kTarget ? "target" : "nontarget"; }

TrialList build_trials(const LabeledEmbeddingSet& test, std::uint64_t seed) {
  if (test.num_speakers() < 2) throw std::invalid_argument("build_trials: need at least two speakers");
  std::mt19937_64 rng(seed);
  TrialList out;

  std::unordered_map<std::string, std::size_t> per_speaker;
  for (const auto& l : test.labels) ++per_speaker[l];
  for (const auto& [_, n] : per_speaker) {
    if (n < 2) ++out.speakers_without_targets;
  }

  std::vector<std::size_t> pool;
  for (std::size_t u = 0; u < test.size(); ++u) {
    std::size_t targets = 0;
    for (std::size_t v = u + 1; v < test.size(); ++v) {
      if (test.labels[v] == test.labels[u]) {
        out.trials.push_back({u, v, TrialLabel::kTarget});
        ++targets;
      }
    }
    if (targets == 0) continue;
    pool.clear();
    for (std::size_t v = 0; v < test.size(); ++v) {
      if (test.labels[v] != test.labels[u]) pool.push_back(v);
    }
    if (targets > pool.size()) {
      ++out.utterances_short_of_nontargets;
      targets = pool.size();
    }
    // Partial Fisher-Yates: the first `targets` slots become the sample.
    for (std::size_t k = 0; k < targets; ++k) {
      std::uniform_int_distribution<std::size_t> pick(k, pool.size() - 1);
      std::swap(pool[k], pool[pick(rng)]);
      out.trials.push_back({u, pool[k], TrialLabel::kNontarget});
    }
  }
  return out;
}

namespace {

struct OperatingPoint {
  double far;
  double frr;
};

// Operating points for thresholds -inf, every distinct score, +inf, in
// increasing threshold order.
std::vector<OperatingPoint> operating_points(std::span<const ScoredTrial> trials) {
  std::size_t n_tgt = 0, n_non = 0;
  for (const auto& t : trials) {
    if (!std::isfinite(t.score)) throw std::invalid_argument("trial scores must be finite");
    (t.label == TrialLabel::kTarget ? n_tgt : n_non)++;
  }
  if (n_tgt == 0 || n_non == 0) {
    throw std::invalid_argument("metrics need at least one target and one non-target trial");
  }
  std::vector<ScoredTrial> sorted(trials.begin(), trials.end());
  std::sort(sorted.begin(), sorted.end(), [](const ScoredTrial& a, const ScoredTrial& b) { return a.score < b.score; });

  std::vector<OperatingPoint> pts;
  pts.reserve(sorted.size() + 2);
  pts.push_back({1.0, 0.0});
  std::size_t tgt_below = 0, non_below = 0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    // Threshold = sorted[i].score; everything before i is rejected.
    pts.push_back({static_cast<double>(n_non - non_below) / static_cast<double>(n_non),
                   static_cast<double>(tgt_below) / static_cast<double>(n_tgt)});
    const double v = sorted[i].score;
    while (i < sorted.size() && sorted[i].score == v) {
      (sorted[i].label == TrialLabel::kTarget ? tgt_below : non_below)++;
      ++i;
    }
  }
  pts.push_back({0.0, 1.0});
  return pts;
}

}  // namespace

double compute_eer(std::span<const ScoredTrial> trials) {
  const auto pts = operating_points(trials);
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const double g = pts[k].frr - pts[k].far;
    if (g < 0.0) continue;
    if (g == 0.0 || k == 0) return 100.0 * pts[k].frr;
    const double g_prev = pts[k - 1].frr - pts[k - 1].far;
    const double alpha = -g_prev / (g - g_prev);
    return 100.0 * (pts[k - 1].frr + alpha * (pts[k].frr - pts[k - 1].frr));
  }
  return 100.0;  // unreachable: the +inf point has g = 1
}

void DcfParams::validate() const {
  if (!(p_target > 0.0 && p_target < 1.0)) throw std::invalid_argument("p_target must lie in (0, 1)");
  if (!(c_miss > 0.0) || !(c_fa > 0.0)) throw std::invalid_argument("DCF costs must be positive");
}

double compute_min_dcf(std::span<const ScoredTrial> trials, const DcfParams& params) {
  params.validate();
  const auto pts = operating_points(trials);
  const double w_miss = params.c_miss * params.p_target;
  const double w_fa = params.c_fa * (1.0 - params.p_target);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : pts) best = std::min(best, w_miss * p.frr + w_fa * p.far);
  return best / std::min(w_miss, w_fa);
}

VerificationReport make_report(std::span<const ScoredTrial> trials, const DcfParams& params) {
  VerificationReport r;
  r.dcf = params;
  r.eer = compute_eer(trials);
  r.min_dcf = compute_min_dcf(trials, params);
  for (const auto& t : trials) (t.label == TrialLabel::kTarget ? r.n_target : r.n_nontarget)++;
  return r;
}

nlohmann::json to_json(const VerificationReport& r) {
  return {{"eer_percent", r.eer},
          {"min_dcf", r.min_dcf},
          {"n_target", r.n_target},
          {"n_nontarget", r.n_nontarget},
          {"p_target", r.dcf.p_target},
          {"c_miss", r.dcf.c_miss},
          {"c_fa", r.dcf.c_fa}};
}

SpeakerSplit split_speakers(const LabeledEmbeddingSet& corpus, std::uint64_t seed, double train_fraction) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw std::invalid_argument("train_fraction must lie in (0, 1)");
  }
  std::set<std::string> unique(corpus.labels.begin(), corpus.labels.end());
  std::vector<std::string> speakers(unique.begin(), unique.end());
  std::mt19937_64 rng(seed);
  for (std::size_t k = speakers.size(); k > 1; --k) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    std::swap(speakers[k - 1], speakers[pick(rng)]);
  }
  const auto n_train = static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(speakers.size()) + 1e-9));
  if (speakers.size() - n_train < 2) {
    throw std::invalid_argument("split leaves fewer than two test speakers (" + std::to_string(speakers.size()) +
                                " speakers total)");
  }
  SpeakerSplit s;
  s.train.assign(speakers.begin(), speakers.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.test.assign(speakers.begin() + static_cast<std::ptrdiff_t>(n_train), speakers.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

LabeledEmbeddingSet select_speakers(const LabeledEmbeddingSet& corpus, std::span<const std::string> speakers) {
  std::set<std::string> keep(speakers.begin(), speakers.end());
  LabeledEmbeddingSet out;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (keep.contains(corpus.labels[i])) out.add(corpus.ids[i], corpus.labels[i], corpus.vectors[i]);
  }
  return out;
}

std::vector<ScoredTrial> score_trials(const Backend& backend, const LabeledEmbeddingSet& test,
                                      std::span<const Trial> trials) {
  std::vector<Vector> pre;
  pre.reserve(test.size());
  for (const auto& v : test.vectors) pre.push_back(backend.preprocess(v));
  std::vector<ScoredTrial> out;
  out.reserve(trials.size());
  for (const auto& t : trials) out.push_back({backend.plda.score(pre[t.a], pre[t.b]), t.label});
  return out;
}

void write_trials(std::ostream& os, const LabeledEmbeddingSet& test, std::span<const Trial> trials) {
  for (const auto& t : trials) {
    os << test.ids[t.a] << ' ' << test.ids[t.b] << ' ' << to_string(t.label) << '\n';
  }
}

Evaluation evaluate_split(const LabeledEmbeddingSet& train, const LabeledEmbeddingSet& test,
                          const BackendConfig& backend_cfg, std::uint64_t trial_seed, const DcfParams& dcf) {
  Evaluation ev;
  ev.backend = fit_backend(train, backend_cfg).backend;
  ev.test = test;
  ev.trials = build_trials(test, trial_seed);
  ev.scores = score_trials(ev.backend, test, ev.trials.trials);
  ev.report = make_report(ev.scores, dcf);
  return ev;
}

Evaluation evaluate_corpus(const LabeledEmbeddingSet& corpus, const BackendConfig& backend_cfg,
                           std::uint64_t split_seed, const DcfParams& dcf) {
  corpus.validate();
  auto split = split_speakers(corpus, split_seed);
  auto ev = evaluate_split(select_speakers(corpus, split.train), select_speakers(corpus, split.test), backend_cfg,
                           split_seed ^ 0x9E3779B97F4A7C15ULL, dcf);
  ev.split = std::move(split);
  return ev;
}

}  // namespace avcurate
