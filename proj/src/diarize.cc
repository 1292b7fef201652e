#include "avcurate/diarize.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "avcurate/parallel.h"

namespace avcurate {

std::optional<DistanceMatrix> plda_distance_matrix(const PldaModel& model, std::span<const Vector> xs) {
  const std::size_t n = xs.size();
  if (n < 2) return std::nullopt;
  std::vector<double> s(n * n, 0.0);
  double s_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      s[i * n + j] = model.score(xs[i], xs[j]);
      s_max = std::max(s_max, s[i * n + j]);
    }
  }
  DistanceMatrix d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d.set(i, j, s_max - s[i * n + j]);
  }
  return d;
}

CleaningReport clean_speaker(const PldaModel& model, const std::string& speaker, std::span<const std::string> ids,
                             std::span<const Vector> xs, double eps, std::size_t min_pts) {
  if (ids.size() != xs.size()) throw std::invalid_argument("clean_speaker: ids and vectors differ in length");
  CleaningReport r;
  r.speaker = speaker;
  r.eps = eps;
  r.min_pts = min_pts;
  auto keep_all = [&] {
    r.kept.assign(ids.begin(), ids.end());
    r.vsr = 1.0;
  };
  if (xs.size() < 2 || xs.size() < min_pts) {
    r.passthrough = true;
    keep_all();
    return r;
  }
  const auto d = plda_distance_matrix(model, xs);
  const auto assignment = dbscan(*d, eps, min_pts);
  const auto winner = largest_cluster(assignment);
  if (!winner) {
    r.degenerate = true;
    keep_all();
    return r;
  }
  std::vector<bool> in(xs.size(), false);
  for (auto m : winner->members) in[m] = true;
  for (std::size_t i = 0; i < xs.size(); ++i) (in[i] ? r.kept : r.dropped).push_back(ids[i]);
  r.vsr = static_cast<double>(r.kept.size()) / static_cast<double>(xs.size());
  return r;
}

CleanedCorpus clean_corpus(const Backend& backend, const LabeledEmbeddingSet& corpus, double eps,
                           std::size_t min_pts, std::size_t jobs) {
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto [it, fresh] = members.try_emplace(corpus.labels[i]);
    if (fresh) order.push_back(corpus.labels[i]);
    it->second.push_back(i);
  }

  CleanedCorpus out;
  out.reports.resize(order.size());
  parallel_for(order.size(), jobs, [&](std::size_t s) {
    const auto& idx = members.at(order[s]);
    std::vector<std::string> ids;
    std::vector<Vector> xs;
    for (auto i : idx) {
      ids.push_back(corpus.ids[i]);
      xs.push_back(backend.preprocess(corpus.vectors[i]));
    }
    out.reports[s] = clean_speaker(backend.plda, order[s], ids, xs, eps, min_pts);
  });

  std::unordered_map<std::string, bool> kept;
  double vsr_sum = 0.0;
  for (const auto& r : out.reports) {
    vsr_sum += r.vsr;
    for (const auto& id : r.kept) kept[id] = true;
  }
  out.mean_vsr = out.reports.empty() ? 1.0 : vsr_sum / static_cast<double>(out.reports.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (kept.contains(corpus.ids[i])) out.kept.add(corpus.ids[i], corpus.labels[i], corpus.vectors[i]);
  }
  return out;
}

std::vector<SweepRow> eps_sweep(const Backend& backend, const LabeledEmbeddingSet& corpus,
                                std::span<const double> eps_list, std::size_t min_pts,
                                const SweepEvaluator& evaluate, std::size_t jobs) {
  if (eps_list.empty()) throw std::invalid_argument("eps_sweep: empty eps list");
  if (corpus.num_speakers() < 2) throw std::invalid_argument("eps_sweep: need at least two speakers");
  std::vector<SweepRow> rows;
  for (double eps : eps_list) {
    const auto cleaned = clean_corpus(backend, corpus, eps, min_pts, jobs);
    SweepRow row;
    row.eps = eps;
    row.mean_vsr = cleaned.mean_vsr;
    row.kept = cleaned.kept.size();
    row.total = corpus.size();
    for (const auto& r : cleaned.reports) row.degenerate_speakers += r.degenerate ? 1 : 0;
    if (evaluate) row.verification = evaluate(cleaned);
    rows.push_back(std::move(row));
  }
  return rows;
}

CleaningStudy run_cleaning_study(const LabeledEmbeddingSet& corpus, std::span<const double> eps_list,
                                 std::size_t min_pts, const BackendConfig& backend_cfg, std::uint64_t seed,
                                 const DcfParams& dcf, std::size_t jobs) {
  CleaningStudy study;
  study.before = evaluate_corpus(corpus, backend_cfg, seed, dcf);
  const auto& split = study.before.split;
  const std::uint64_t trial_seed = seed ^ 0x9E3779B97F4A7C15ULL;
  study.rows = eps_sweep(
      study.before.backend, corpus, eps_list, min_pts,
      [&](const CleanedCorpus& cleaned) {
        return evaluate_split(select_speakers(cleaned.kept, split.train), select_speakers(cleaned.kept, split.test),
                              backend_cfg, trial_seed, dcf)
            .report;
      },
      jobs);
  return study;
}

nlohmann::json to_json(const CleaningReport& r) {
  return {{"speaker", r.speaker}, {"kept", r.kept},       {"dropped", r.dropped},
          {"vsr", r.vsr},         {"eps", r.eps},         {"min_pts", r.min_pts},
          {"passthrough", r.passthrough}, {"degenerate", r.degenerate}};
}

nlohmann::json to_json(const SweepRow& r) {
  nlohmann::json j = {{"eps", r.eps},
                      {"mean_vsr", r.mean_vsr},
                      {"kept", r.kept},
                      {"total", r.total},
                      {"degenerate_speakers", r.degenerate_speakers}};
  if (r.verification) j["verification"] = to_json(*r.verification);
  return j;
}

std::string format_sweep_table(std::span<const SweepRow> rows, const std::optional<VerificationReport>& before) {
  std::ostringstream out;
  out << std::fixed;
  out << std::setw(10) << "eps" << " | " << std::setw(6) << "VSR" << " | " << std::setw(7) << "EER%"
      << " | " << std::setw(7) << "MinDCF" << "\n";
  out << std::string(10, '-') << "-+-" << std::string(6, '-') << "-+-" << std::string(7, '-') << "-+-"
      << std::string(7, '-') << "\n";
  if (before) {
    out << std::setw(10) << "raw" << " | " << std::setw(6) << std::setprecision(2) << 1.0 << " | " << std::setw(7)
        << std::setprecision(2) << before->eer << " | " << std::setw(7) << std::setprecision(3) << before->min_dcf
        << "\n";
  }
  for (const auto& r : rows) {
    out << std::setw(10) << std::setprecision(3) << r.eps << " | " << std::setw(6) << std::setprecision(2)
        << r.mean_vsr << " | ";
    if (r.verification) {
      out << std::setw(7) << std::setprecision(2) << r.verification->eer << " | " << std::setw(7)
          << std::setprecision(3) << r.verification->min_dcf;
    } else {
      out << std::setw(7) << "-" << " | " << std::setw(7) << "-";
    }
    out << "\n";
  }
  return out.str();
}

}  // namespace avcurate
