// Verification backend: centering, LDA, length normalization and a
// two-covariance PLDA trained by EM.
//
// Preprocessing order is fixed: center -> LDA -> length-normalize -> PLDA.
//
// PLDA1 container, little-endian:
//   "PLDA1"  u32 input_dim  u32 lda_dim  u8 length_norm
//   f64 lda_mean[input_dim]
//   f64 lda_projection[lda_dim x input_dim]   (row-major)
//   f64 plda_mu[lda_dim]
//   f64 between[lda_dim x lda_dim]             (row-major)
//   f64 within[lda_dim x lda_dim]              (row-major)

#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

namespace avcurate {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

struct LabeledEmbeddingSet {
  std::vector<std::string> ids;
  std::vector<std::string> labels;  // speaker of each vector
  std::vector<Vector> vectors;

  void add(std::string id, std::string label, Vector v);
  std::size_t size() const { return vectors.size(); }
  std::size_t dim() const { return vectors.empty() ? 0 : static_cast<std::size_t>(vectors.front().size()); }
  std::size_t num_speakers() const;

  // Throws std::invalid_argument unless there are >= 2 speakers, all vectors
  // share one dim and all values are finite.
  void validate() const;
};

struct LdaTransform {
  Vector mean;
  Matrix projection;  // r x d, rows by descending discriminant eigenvalue

  Vector apply(const Vector& x) const { return projection * (x - mean); }
  std::size_t output_dim() const { return static_cast<std::size_t>(projection.rows()); }
};

// Top-r generalized eigenvectors of S_b against S_w + lambda I, with
// lambda = 1e-4 * trace(S_w) / d. Requires 1 <= r <= min(d, speakers - 1).
LdaTransform fit_lda(const LabeledEmbeddingSet& data, std::size_t r);

// x * sqrt(dim) / |x|. Rejects the zero vector.
Vector length_normalize(const Vector& x);

class PldaModel {
 public:
  PldaModel() = default;
  // Validates symmetry, B positive semi-definite, W positive definite, and
  // precomputes the scoring quadratic form.
  PldaModel(Vector mu, Matrix between, Matrix within);

  const Vector& mu() const { return mu_; }
  const Matrix& between() const { return between_; }
  const Matrix& within() const { return within_; }
  std::size_t dim() const { return static_cast<std::size_t>(mu_.size()); }

  // log p(x1, x2 | same speaker) - log p(x1, x2 | different speakers).
  double score(const Vector& x1, const Vector& x2) const;

 private:
  Vector mu_;
  Matrix between_;
  Matrix within_;
  Matrix q_;  // 0.5 x'Qx terms
  Matrix p_;  // x1'Px2 cross term
  double offset_ = 0.0;
};

struct PldaConfig {
  int iterations = 10;
  double floor = 1e-6;  // eigenvalue floor for B and W
};

struct PldaFit {
  PldaModel model;
  // Total data log-likelihood at initialization and after each iteration.
  std::vector<double> log_likelihood;
  std::size_t singleton_speakers = 0;
};

// Two-covariance model x = mu + b + w, b ~ N(0, B), w ~ N(0, W). mu is the
// sample mean; B and W follow EM. Speakers with one vector enter the E-step
// and the W update but not the B update.
PldaFit fit_plda(const LabeledEmbeddingSet& data, const PldaConfig& cfg = {});

// Sum over speakers of the exact marginal log-likelihood of their vectors.
double plda_log_likelihood(const Vector& mu, const Matrix& between, const Matrix& within,
                           const LabeledEmbeddingSet& data);

struct BackendConfig {
  std::size_t lda_dim = 200;  // clipped to min(d, speakers - 1)
  bool length_norm = true;
  PldaConfig plda;
};

struct Backend {
  LdaTransform lda;
  PldaModel plda;
  bool length_norm = true;

  Vector preprocess(const Vector& raw) const;
  LabeledEmbeddingSet preprocess(const LabeledEmbeddingSet& raw) const;
  double score_raw(const Vector& a, const Vector& b) const { return plda.score(preprocess(a), preprocess(b)); }
};

struct BackendFit {
  Backend backend;
  std::vector<double> log_likelihood;
};

BackendFit fit_backend(const LabeledEmbeddingSet& train, const BackendConfig& cfg = {});

void save_backend(const std::filesystem::path& path, const Backend& b);
Backend load_backend(const std::filesystem::path& path);

}  // namespace avcurate
