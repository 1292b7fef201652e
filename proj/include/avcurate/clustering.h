// Density clustering (DBSCAN) over a precomputed distance matrix, and the
// template-face construction built on it.

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "avcurate/core.h"

namespace avcurate {

// Symmetric n x n matrix of non-negative finite distances with zero diagonal.
// set() writes both triangles, so matrices built through it are exactly
// symmetric.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n);

  // Takes a row-major dense matrix and validates it.
  static DistanceMatrix from_dense(std::size_t n, std::vector<double> values);

  // Pairwise Euclidean distances between equal-length rows.
  static DistanceMatrix euclidean(std::span<const std::vector<double>> points);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return d_[i * n_ + j]; }
  void set(std::size_t i, std::size_t j, double v);

  double max_value() const;

  // Throws std::invalid_argument when an invariant does not hold.
  void validate() const;

 private:
  std::size_t n_ = 0;
  std::vector<double> d_;
};

// labels[i] == kNoise or a cluster index in [0, num_clusters). Clusters are
// numbered by descending size, ties broken by smallest member index.
struct ClusterAssignment {
  static constexpr int kNoise = -1;

  std::vector<int> labels;
  std::vector<bool> core;
  int num_clusters = 0;
};

// A point is core when at least min_pts points (itself included) lie within
// distance <= eps. Clusters are eps-connected components of core points plus
// the non-core points within eps of them. A border point reachable from
// several clusters goes to the one whose smallest core index is lowest.
ClusterAssignment dbscan(const DistanceMatrix& d, double eps, std::size_t min_pts);

struct ClusterMembers {
  int label = ClusterAssignment::kNoise;
  std::vector<std::size_t> members;  // ascending
};

// Largest cluster; ties go to the cluster holding the smallest point index.
// Works on any labeling, canonical or not. nullopt when everything is noise.
std::optional<ClusterMembers> largest_cluster(const ClusterAssignment& a);

struct TemplateConfig {
  double eps = 0.5;
  std::size_t min_pts = 2;
  std::size_t min_support = 10;
};

struct TemplateFace {
  SpeakerId speaker;
  Embedding vector;  // mean of the winning cluster
  std::size_t support = 0;
};

// Speaker skipped: the largest face cluster was below min_support.
struct TemplateRejection {
  SpeakerId speaker;
  std::size_t largest_support = 0;
};

using TemplateOutcome = std::variant<TemplateFace, TemplateRejection>;

// Clusters face embeddings by Euclidean distance between L2-normalized
// copies and averages the (unnormalized) members of the largest cluster.
TemplateOutcome build_template(const SpeakerId& speaker, std::span<const Embedding> faces,
                               const TemplateConfig& cfg = {});

}  // namespace avcurate
