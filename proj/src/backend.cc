#include "avcurate/backend.h"

#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>
#include <unordered_map>

#include "avcurate/binary_io.h"

namespace avcurate {

void LabeledEmbeddingSet::add(std::string id, std::string label, Vector v) {
  ids.push_back(std::move(id));
  labels.push_back(std::move(label));
  vectors.push_back(std::move(v));
}

std::size_t LabeledEmbeddingSet::num_speakers() const {
  std::unordered_map<std::string, int> seen;
  for (const auto& l : labels) seen.emplace(l, 0);
  return seen.size();
}

void LabeledEmbeddingSet::validate() const {
  if (ids.size() != vectors.size() || labels.size() != vectors.size()) {
    throw std::invalid_argument("labeled set: ids/labels/vectors differ in length");
  }
  if (num_speakers() < 2) throw std::invalid_argument("labeled set needs at least 2 speakers");
  const auto d = vectors.front().size();
  if (d == 0) throw std::invalid_argument("labeled set has zero-dimensional vectors");
  for (const auto& v : vectors) {
    if (v.size() != d) throw std::invalid_argument("labeled set mixes vector dimensions");
    if (!v.allFinite()) throw std::invalid_argument("labeled set has non-finite values");
  }
}

namespace {

// Speaker groups in first-appearance order, so every derived statistic is
// independent of hash iteration order.
struct Groups {
  std::vector<std::vector<std::size_t>> members;
};

Groups group_by_speaker(const LabeledEmbeddingSet& data) {
  Groups g;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < data.size(); ++i) {
    auto [it, fresh] = slot.emplace(data.labels[i], g.members.size());
    if (fresh) g.members.emplace_back();
    g.members[it->second].push_back(i);
  }
  return g;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

// Clamps eigenvalues below `floor`; leaves well-conditioned matrices untouched.
Matrix apply_floor(const Matrix& m, double floor) {
  Matrix s = symmetrize(m);
  Eigen::SelfAdjointEigenSolver<Matrix> es(s);
  if (es.eigenvalues().minCoeff() >= floor) return s;
  Vector ev = es.eigenvalues().cwiseMax(floor);
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

double log_det_pd(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) throw std::runtime_error("matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

LdaTransform fit_lda(const LabeledEmbeddingSet& data, std::size_t r) {
  data.validate();
  const auto d = static_cast<Eigen::Index>(data.dim());
  const auto groups = group_by_speaker(data);
  const std::size_t n_spk = groups.members.size();
  if (r == 0 || r > std::min<std::size_t>(data.dim(), n_spk - 1)) {
    throw std::invalid_argument("fit_lda: target dim " + std::to_string(r) + " outside [1, min(d, speakers-1)] = [1, " +
                                std::to_string(std::min<std::size_t>(data.dim(), n_spk - 1)) + "]");
  }
  const double n = static_cast<double>(data.size());

  LdaTransform t;
  t.mean = Vector::Zero(d);
  for (const auto& v : data.vectors) t.mean += v;
  t.mean /= n;

  Matrix sw = Matrix::Zero(d, d);
  Matrix sb = Matrix::Zero(d, d);
  for (const auto& members : groups.members) {
    Vector m = Vector::Zero(d);
    for (auto i : members) m += data.vectors[i];
    m /= static_cast<double>(members.size());
    for (auto i : members) {
      const Vector c = data.vectors[i] - m;
      sw.noalias() += c * c.transpose();
    }
    const Vector dm = m - t.mean;
    sb.noalias() += static_cast<double>(members.size()) * dm * dm.transpose();
  }
  sw /= n;
  sb /= n;
  const double lambda = 1e-4 * sw.trace() / static_cast<double>(d);
  sw.diagonal().array() += lambda;

  Eigen::LLT<Matrix> check(sw);
  if (lambda <= 0.0 || check.info() != Eigen::Success) {
    throw std::runtime_error("fit_lda: within-class scatter is singular after regularization");
  }
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(symmetrize(sb), symmetrize(sw));
  if (ges.info() != Eigen::Success) throw std::runtime_error("fit_lda: eigen solver failed");

  t.projection.resize(static_cast<Eigen::Index>(r), d);
  for (std::size_t k = 0; k < r; ++k) {
    Vector v = ges.eigenvectors().col(d - 1 - static_cast<Eigen::Index>(k));
    Eigen::Index big;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0) v = -v;
    t.projection.row(static_cast<Eigen::Index>(k)) = v.transpose();
  }
  return t;
}

Vector length_normalize(const Vector& x) {
  const double norm = x.norm();
  if (!(norm > 0.0)) throw std::invalid_argument("length_normalize: zero vector");
  return x * (std::sqrt(static_cast<double>(x.size())) / norm);
}

PldaModel::PldaModel(Vector mu, Matrix between, Matrix within)
    : mu_(std::move(mu)), between_(std::move(between)), within_(std::move(within)) {
  const auto r = mu_.size();
  if (between_.rows() != r || between_.cols() != r || within_.rows() != r || within_.cols() != r) {
    throw std::invalid_argument("PldaModel: dimension mismatch");
  }
  if (!mu_.allFinite() || !between_.allFinite() || !within_.allFinite()) {
    throw std::invalid_argument("PldaModel: non-finite parameters");
  }
  auto asym = [](const Matrix& m) { return (m - m.transpose()).cwiseAbs().maxCoeff(); };
  if (asym(between_) > 1e-9 * (1.0 + between_.cwiseAbs().maxCoeff()) ||
      asym(within_) > 1e-9 * (1.0 + within_.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("PldaModel: covariances must be symmetric");
  }
  between_ = symmetrize(between_);
  within_ = symmetrize(within_);
  Eigen::SelfAdjointEigenSolver<Matrix> eb(between_, Eigen::EigenvaluesOnly);
  if (eb.eigenvalues().minCoeff() < -1e-10 * (1.0 + eb.eigenvalues().cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("PldaModel: between covariance is not positive semi-definite");
  }
  if (Eigen::LLT<Matrix>(within_).info() != Eigen::Success) {
    throw std::invalid_argument("PldaModel: within covariance is not positive definite");
  }

  // Same-speaker joint covariance [[T, B], [B, T]] with T = B + W. Its
  // inverse is [[A, C], [C, A]] with A = (T - B T^-1 B)^-1, C = -T^-1 B A.
  const Matrix total = between_ + within_;
  const Eigen::LLT<Matrix> total_llt(total);
  const Matrix total_inv = total_llt.solve(Matrix::Identity(r, r));
  const Matrix schur = symmetrize(total - between_ * total_inv * between_);
  const Eigen::LLT<Matrix> schur_llt(schur);
  if (schur_llt.info() != Eigen::Success) throw std::invalid_argument("PldaModel: degenerate covariances");
  const Matrix a = schur_llt.solve(Matrix::Identity(r, r));
  const Matrix c = -total_inv * between_ * a;
  q_ = symmetrize(total_inv - a);
  p_ = symmetrize(-c);
  offset_ = 0.5 * log_det_pd(total) - 0.5 * log_det_pd(schur);
}

double PldaModel::score(const Vector& x1, const Vector& x2) const {
  if (x1.size() != mu_.size() || x2.size() != mu_.size()) {
    throw std::invalid_argument("plda score: vector dim does not match model dim " + std::to_string(mu_.size()));
  }
  const Vector z1 = x1 - mu_;
  const Vector z2 = x2 - mu_;
  const double quad = 0.5 * (z1.dot(q_ * z1) + z2.dot(q_ * z2));
  const double cross = 0.5 * (z1.dot(p_ * z2) + z2.dot(p_ * z1));
  return quad + cross + offset_;
}

double plda_log_likelihood(const Vector& mu, const Matrix& between, const Matrix& within,
                           const LabeledEmbeddingSet& data) {
  const auto d = mu.size();
  const auto groups = group_by_speaker(data);
  const Eigen::LLT<Matrix> w_llt(within);
  if (w_llt.info() != Eigen::Success) throw std::runtime_error("within covariance not positive definite");
  const double logdet_w = log_det_pd(within);
  const double log2pi = std::log(2.0 * std::numbers::pi);

  // For n vectors of one speaker: the mean direction has covariance W + nB
  // (scaled by 1/n), the n-1 orthogonal directions have covariance W.
  std::map<std::size_t, std::pair<Eigen::LLT<Matrix>, double>> by_n;
  double total = 0.0;
  for (const auto& members : groups.members) {
    const std::size_t n = members.size();
    auto it = by_n.find(n);
    if (it == by_n.end()) {
      Matrix m = within + static_cast<double>(n) * between;
      Eigen::LLT<Matrix> llt(m);
      if (llt.info() != Eigen::Success) throw std::runtime_error("W + nB not positive definite");
      it = by_n.emplace(n, std::make_pair(llt, log_det_pd(m))).first;
    }
    Vector mean = Vector::Zero(d);
    for (auto i : members) mean += data.vectors[i] - mu;
    mean /= static_cast<double>(n);
    double quad = 0.0;
    for (auto i : members) {
      const Vector dev = data.vectors[i] - mu - mean;
      quad += dev.dot(w_llt.solve(dev));
    }
    quad += static_cast<double>(n) * mean.dot(it->second.first.solve(mean));
    const double logdet = static_cast<double>(n - 1) * logdet_w + it->second.second;
    total += -0.5 * (static_cast<double>(n * d) * log2pi + logdet + quad);
  }
  return total;
}

PldaFit fit_plda(const LabeledEmbeddingSet& data, const PldaConfig& cfg) {
  data.validate();
  if (cfg.iterations < 0) throw std::invalid_argument("fit_plda: iterations must be >= 0");
  if (!(cfg.floor > 0.0)) throw std::invalid_argument("fit_plda: floor must be positive");
  const auto d = static_cast<Eigen::Index>(data.dim());
  const auto groups = group_by_speaker(data);
  const double n_total = static_cast<double>(data.size());

  PldaFit fit;
  Vector mu = Vector::Zero(d);
  for (const auto& v : data.vectors) mu += v;
  mu /= n_total;

  // Per-speaker first-order stats and the total scatter of centered data.
  std::vector<Vector> sums;
  Matrix scatter = Matrix::Zero(d, d);
  for (const auto& members : groups.members) {
    Vector s = Vector::Zero(d);
    for (auto i : members) {
      const Vector z = data.vectors[i] - mu;
      s += z;
      scatter.noalias() += z * z.transpose();
    }
    sums.push_back(std::move(s));
    if (members.size() == 1) ++fit.singleton_speakers;
  }
  const std::size_t multi = groups.members.size() - fit.singleton_speakers;

  Matrix within = Matrix::Zero(d, d);
  Matrix between = Matrix::Zero(d, d);
  for (std::size_t s = 0; s < groups.members.size(); ++s) {
    const auto n = static_cast<double>(groups.members[s].size());
    const Vector m = sums[s] / n;
    for (auto i : groups.members[s]) {
      const Vector c = data.vectors[i] - mu - m;
      within.noalias() += c * c.transpose();
    }
    if (groups.members[s].size() > 1) between.noalias() += m * m.transpose();
  }
  within = apply_floor(within / n_total, cfg.floor);
  between = apply_floor(multi > 0 ? Matrix(between / static_cast<double>(multi)) : Matrix::Zero(d, d), cfg.floor);

  fit.log_likelihood.push_back(plda_log_likelihood(mu, between, within, data));
  for (int it = 0; it < cfg.iterations; ++it) {
    const Matrix w_inv = Eigen::LLT<Matrix>(within).solve(Matrix::Identity(d, d));
    const Matrix b_inv = Eigen::LLT<Matrix>(between).solve(Matrix::Identity(d, d));

    std::map<std::size_t, Matrix> post_cov;  // keyed by vectors per speaker
    Matrix b_acc = Matrix::Zero(d, d);
    Matrix w_acc = scatter;
    for (std::size_t s = 0; s < groups.members.size(); ++s) {
      const std::size_t n = groups.members[s].size();
      auto pc = post_cov.find(n);
      if (pc == post_cov.end()) {
        const Matrix precision = b_inv + static_cast<double>(n) * w_inv;
        pc = post_cov.emplace(n, symmetrize(Eigen::LLT<Matrix>(precision).solve(Matrix::Identity(d, d)))).first;
      }
      const Matrix& cov = pc->second;
      const Vector y = cov * (w_inv * sums[s]);
      const Matrix second = y * y.transpose() + cov;
      if (n > 1) b_acc += second;
      w_acc.noalias() -= y * sums[s].transpose() + sums[s] * y.transpose();
      w_acc += static_cast<double>(n) * second;
    }
    if (multi > 0) between = apply_floor(b_acc / static_cast<double>(multi), cfg.floor);
    within = apply_floor(w_acc / n_total, cfg.floor);
    fit.log_likelihood.push_back(plda_log_likelihood(mu, between, within, data));
  }
  fit.model = PldaModel(mu, between, within);
  return fit;
}

Vector Backend::preprocess(const Vector& raw) const {
  Vector y = lda.apply(raw);
  return length_norm ? length_normalize(y) : y;
}

LabeledEmbeddingSet Backend::preprocess(const LabeledEmbeddingSet& raw) const {
  LabeledEmbeddingSet out;
  out.ids = raw.ids;
  out.labels = raw.labels;
  out.vectors.reserve(raw.size());
  for (const auto& v : raw.vectors) out.vectors.push_back(preprocess(v));
  return out;
}

BackendFit fit_backend(const LabeledEmbeddingSet& train, const BackendConfig& cfg) {
  train.validate();
  const std::size_t r = std::min({cfg.lda_dim, train.dim(), train.num_speakers() - 1});
  BackendFit out;
  out.backend.lda = fit_lda(train, r);
  out.backend.length_norm = cfg.length_norm;
  LabeledEmbeddingSet projected;
  projected.ids = train.ids;
  projected.labels = train.labels;
  for (const auto& v : train.vectors) {
    Vector y = out.backend.lda.apply(v);
    projected.vectors.push_back(cfg.length_norm ? length_normalize(y) : y);
  }
  auto plda = fit_plda(projected, cfg.plda);
  out.backend.plda = std::move(plda.model);
  out.log_likelihood = std::move(plda.log_likelihood);
  return out;
}

namespace {

constexpr std::string_view kPldaMagic = "PLDA1";

void write_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) binio::write_f64(os, m(i, j));
  }
}

Matrix read_matrix(std::istream& is, Eigen::Index rows, Eigen::Index cols) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      m(i, j) = binio::read_f64(is, "PLDA1 matrix");
      if (!std::isfinite(m(i, j))) throw FormatError(FormatErrorKind::kNonFinite, "PLDA1 matrix entry");
    }
  }
  return m;
}

}  // namespace

void save_backend(const std::filesystem::path& path, const Backend& b) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string() + " for writing");
  const auto d = b.lda.projection.cols();
  const auto r = b.lda.projection.rows();
  binio::write_magic(os, kPldaMagic);
  binio::write_u32(os, static_cast<std::uint32_t>(d));
  binio::write_u32(os, static_cast<std::uint32_t>(r));
  binio::write_u8(os, b.length_norm ? 1 : 0);
  write_matrix(os, b.lda.mean);
  write_matrix(os, b.lda.projection);
  write_matrix(os, b.plda.mu());
  write_matrix(os, b.plda.between());
  write_matrix(os, b.plda.within());
  if (!os) throw FormatError(FormatErrorKind::kIo, "write failed for " + path.string());
}

Backend load_backend(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError(FormatErrorKind::kIo, "cannot open " + path.string());
  binio::expect_magic(is, kPldaMagic, path.string());
  const auto d = static_cast<Eigen::Index>(binio::read_u32(is, "PLDA1 input_dim"));
  const auto r = static_cast<Eigen::Index>(binio::read_u32(is, "PLDA1 lda_dim"));
  if (d == 0 || r == 0 || r > d) throw FormatError(FormatErrorKind::kDimMismatch, path.string() + ": bad dims");
  Backend b;
  const auto flag = binio::read_u8(is, "PLDA1 length_norm");
  if (flag > 1) throw FormatError(FormatErrorKind::kInvalidValue, "PLDA1 length_norm flag");
  b.length_norm = flag == 1;
  b.lda.mean = read_matrix(is, d, 1);
  b.lda.projection = read_matrix(is, r, d);
  Vector mu = read_matrix(is, r, 1);
  Matrix between = read_matrix(is, r, r);
  Matrix within = read_matrix(is, r, r);
  try {
    b.plda = PldaModel(std::move(mu), std::move(between), std::move(within));
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatErrorKind::kInvalidValue, path.string() + ": " + e.what());
  }
  return b;
}

}  // namespace avcurate
