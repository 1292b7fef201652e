#include "avcurate/clustering.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>
#include <string>

namespace avcurate {

DistanceMatrix::DistanceMatrix(std::size_t n) : n_(n), d_(n * n, 0.0) {}

DistanceMatrix DistanceMatrix::from_dense(std::size_t n, std::vector<double> values) {
  if (values.size() != n * n) {
    throw std::invalid_argument("distance matrix needs n*n values");
  }
  DistanceMatrix m;
  m.n_ = n;
  m.d_ = std::move(values);
  m.validate();
  return m;
}

DistanceMatrix DistanceMatrix::euclidean(std::span<const std::vector<double>> points) {
  DistanceMatrix m(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      if (points[i].size() != points[j].size()) {
        throw std::invalid_argument("euclidean: points of different dimension");
      }
      double acc = 0.0;
      for (std::size_t k = 0; k < points[i].size(); ++k) {
        const double diff = points[i][k] - points[j][k];
        acc += diff * diff;
      }
      m.set(i, j, std::sqrt(acc));
    }
  }
  return m;
}

void DistanceMatrix::set(std::size_t i, std::size_t j, double v) {
  d_[i * n_ + j] = v;
  d_[j * n_ + i] = v;
}

double DistanceMatrix::max_value() const {
  double m = 0.0;
  for (double v : d_) m = std::max(m, v);
  return m;
}

void DistanceMatrix::validate() const {
  for (std::size_t i = 0; i < n_; ++i) {
    if ((*this)(i, i) != 0.0) throw std::invalid_argument("distance matrix diagonal must be zero");
    for (std::size_t j = i + 1; j < n_; ++j) {
      const double a = (*this)(i, j);
      const double b = (*this)(j, i);
      if (!std::isfinite(a) || !std::isfinite(b)) {
        throw std::invalid_argument("distance matrix has non-finite entries");
      }
      if (a < 0.0 || b < 0.0) throw std::invalid_argument("distance matrix has negative entries");
      if (a != b) throw std::invalid_argument("distance matrix is not symmetric");
    }
  }
}

ClusterAssignment dbscan(const DistanceMatrix& d, double eps, std::size_t min_pts) {
  if (!std::isfinite(eps) || eps < 0.0) throw std::invalid_argument("dbscan: eps must be finite and >= 0");
  if (min_pts == 0) throw std::invalid_argument("dbscan: min_pts must be positive");
  d.validate();

  const std::size_t n = d.size();
  std::vector<std::vector<std::size_t>> neighbors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (d(i, j) <= eps) neighbors[i].push_back(j);
    }
  }

  ClusterAssignment out;
  out.core.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.core[i] = neighbors[i].size() >= min_pts;

  // Components of the core graph, numbered in order of their smallest core
  // index (i ascends), so a lower component id means a lower core index.
  std::vector<int> comp(n, ClusterAssignment::kNoise);
  int n_comp = 0;
  for (std::size_t seed = 0; seed < n; ++seed) {
    if (!out.core[seed] || comp[seed] != ClusterAssignment::kNoise) continue;
    std::deque<std::size_t> queue{seed};
    comp[seed] = n_comp;
    while (!queue.empty()) {
      const std::size_t p = queue.front();
      queue.pop_front();
      for (std::size_t q : neighbors[p]) {
        if (out.core[q] && comp[q] == ClusterAssignment::kNoise) {
          comp[q] = n_comp;
          queue.push_back(q);
        }
      }
    }
    ++n_comp;
  }

  for (std::size_t i = 0; i < n; ++i) {
    if (out.core[i]) continue;
    int best = ClusterAssignment::kNoise;
    for (std::size_t q : neighbors[i]) {
      if (out.core[q] && (best == ClusterAssignment::kNoise || comp[q] < best)) best = comp[q];
    }
    comp[i] = best;
  }

  std::vector<std::size_t> size(n_comp, 0);
  std::vector<std::size_t> first(n_comp, n);
  for (std::size_t i = 0; i < n; ++i) {
    if (comp[i] == ClusterAssignment::kNoise) continue;
    ++size[comp[i]];
    first[comp[i]] = std::min(first[comp[i]], i);
  }
  std::vector<int> order(n_comp);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (size[a] != size[b]) return size[a] > size[b];
    return first[a] < first[b];
  });
  std::vector<int> rename(n_comp);
  for (int k = 0; k < n_comp; ++k) rename[order[k]] = k;

  out.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.labels[i] = comp[i] == ClusterAssignment::kNoise ? ClusterAssignment::kNoise : rename[comp[i]];
  }
  out.num_clusters = n_comp;
  return out;
}

std::optional<ClusterMembers> largest_cluster(const ClusterAssignment& a) {
  std::optional<ClusterMembers> best;
  std::vector<int> seen;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const int label = a.labels[i];
    if (label == ClusterAssignment::kNoise) continue;
    if (std::find(seen.begin(), seen.end(), label) != seen.end()) continue;
    seen.push_back(label);
    ClusterMembers c{label, {}};
    for (std::size_t j = i; j < a.labels.size(); ++j) {
      if (a.labels[j] == label) c.members.push_back(j);
    }
    // Labels are visited in order of their smallest member, so a strict
    // comparison keeps the earlier cluster on ties.
    if (!best || c.members.size() > best->members.size()) best = std::move(c);
  }
  return best;
}

TemplateOutcome build_template(const SpeakerId& speaker, std::span<const Embedding> faces,
                               const TemplateConfig& cfg) {
  if (faces.empty()) return TemplateRejection{speaker, 0};
  const std::size_t dim = faces.front().dim();
  std::vector<std::vector<double>> normalized;
  normalized.reserve(faces.size());
  for (const auto& f : faces) {
    if (f.dim() != dim || dim == 0) {
      throw std::invalid_argument("build_template: face '" + f.id + "' has dim " +
                                  std::to_string(f.dim()) + ", expected " + std::to_string(dim));
    }
    double norm = 0.0;
    for (float v : f.values) norm += static_cast<double>(v) * v;
    norm = std::sqrt(norm);
    if (norm == 0.0) throw std::invalid_argument("build_template: zero face embedding '" + f.id + "'");
    std::vector<double> u(dim);
    for (std::size_t k = 0; k < dim; ++k) u[k] = f.values[k] / norm;
    normalized.push_back(std::move(u));
  }

  const auto assignment = dbscan(DistanceMatrix::euclidean(normalized), cfg.eps, cfg.min_pts);
  const auto winner = largest_cluster(assignment);
  const std::size_t support = winner ? winner->members.size() : 0;
  if (support < cfg.min_support) return TemplateRejection{speaker, support};

  std::vector<double> mean(dim, 0.0);
  for (std::size_t m : winner->members) {
    for (std::size_t k = 0; k < dim; ++k) mean[k] += faces[m].values[k];
  }
  TemplateFace t;
  t.speaker = speaker;
  t.support = support;
  t.vector.id = speaker.str();
  t.vector.values.resize(dim);
  for (std::size_t k = 0; k < dim; ++k) {
    t.vector.values[k] = static_cast<float>(mean[k] / static_cast<double>(support));
  }
  return t;
}

}  // namespace avcurate
