#include "avcurate/synth.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace avcurate {

namespace {

// splitmix64 finalizer; derives independent per-frame seeds.
std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9E3779B97F4A7C15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kShotStream = 0x5107;
constexpr std::uint64_t kFrameStream = 0xF7A3;
constexpr std::uint64_t kSyncStream = 0x5C;
constexpr std::uint64_t kPatchStream = 0x9A7;

std::string numbered(const std::string& prefix, std::size_t k) {
  std::ostringstream os;
  os << prefix << std::setw(3) << std::setfill('0') << k;
  return os.str();
}

Vector sample_gaussian(std::mt19937_64& rng, const Matrix& sqrt_cov) {
  std::normal_distribution<double> n01;
  Vector z(sqrt_cov.cols());
  for (Eigen::Index k = 0; k < z.size(); ++k) z[k] = n01(rng);
  return sqrt_cov * z;
}

Matrix resolve_cov(const Matrix& given, double scale, std::size_t dim, const char* what) {
  if (given.size() == 0) return scale * Matrix::Identity(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  if (given.rows() != static_cast<Eigen::Index>(dim) || given.cols() != static_cast<Eigen::Index>(dim)) {
    throw std::invalid_argument(std::string("make_world: ") + what + " has the wrong shape");
  }
  if (!given.isApprox(given.transpose(), 1e-12)) {
    throw std::invalid_argument(std::string("make_world: ") + what + " is not symmetric");
  }
  return given;
}

std::vector<float> random_hist(std::mt19937_64& rng, std::uint32_t bins, std::uint32_t parity = 2) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(bins, 0.0);
  double sum = 0.0;
  for (std::uint32_t k = 0; k < bins; ++k) {
    if (parity < 2 && k % 2 != parity) continue;
    w[k] = u(rng) + 1e-3;
    sum += w[k];
  }
  std::vector<float> out(bins);
  for (std::uint32_t k = 0; k < bins; ++k) out[k] = static_cast<float>(w[k] / sum);
  return out;
}

// (1 - a) * base + a * noise, in double, renormalized.
std::vector<float> blend(std::span<const float> base, std::span<const float> noise, double a) {
  std::vector<double> w(base.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < base.size(); ++k) {
    w[k] = (1.0 - a) * base[k] + a * noise[k];
    sum += w[k];
  }
  std::vector<float> out(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) out[k] = static_cast<float>(w[k] / sum);
  return out;
}

std::vector<float> noisy_face(std::mt19937_64& rng, const std::vector<double>& face, double sd) {
  std::normal_distribution<double> n01;
  std::vector<double> v(face);
  double norm = 0.0;
  for (auto& x : v) {
    x += sd * n01(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  std::vector<float> out(v.size());
  for (std::size_t k = 0; k < v.size(); ++k) out[k] = static_cast<float>(v[k] / norm);
  return out;
}

void check_intervals(const std::vector<FrameInterval>& xs, std::uint32_t n, const char* what) {
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k].first > xs[k].last || xs[k].last >= n) {
      throw std::invalid_argument(std::string("script: ") + what + " interval out of range");
    }
    if (k > 0 && xs[k].first <= xs[k - 1].last) {
      throw std::invalid_argument(std::string("script: ") + what + " intervals overlap or are unordered");
    }
  }
}

// Index of the interval containing i, or -1.
std::ptrdiff_t find_interval(const std::vector<FrameInterval>& xs, std::uint32_t i) {
  auto it = std::upper_bound(xs.begin(), xs.end(), i,
                             [](std::uint32_t v, const FrameInterval& iv) { return v < iv.first; });
  if (it == xs.begin()) return -1;
  --it;
  return i <= it->last ? it - xs.begin() : -1;
}

}  // namespace

const Vector& SpeakerWorld::mean_of(const std::string& id) const {
  for (std::size_t k = 0; k < speakers.size(); ++k) {
    if (speakers[k] == id) return means[k];
  }
  for (std::size_t k = 0; k < distractors.size(); ++k) {
    if (distractors[k] == id) return distractor_means[k];
  }
  throw std::out_of_range("unknown speaker: " + id);
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(m);
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

SpeakerWorld make_world(const WorldParams& p) {
  if (p.dim == 0 || p.n_speakers == 0) throw std::invalid_argument("make_world: empty world");
  SpeakerWorld w;
  w.dim = p.dim;
  w.seed = p.seed;
  w.between = resolve_cov(p.between, p.between_scale, p.dim, "between");
  w.within = resolve_cov(p.within, p.within_scale, p.dim, "within");

  std::mt19937_64 rng(p.seed);
  const Matrix sb = psd_sqrt(w.between);
  for (std::size_t s = 0; s < p.n_speakers; ++s) {
    w.speakers.push_back(numbered("spk", s));
    w.means.push_back(sample_gaussian(rng, sb));
  }
  if (p.exact_between_moments) {
    if (p.n_speakers <= p.dim) throw std::invalid_argument("make_world: exact moments need more speakers than dims");
    Eigen::SelfAdjointEigenSolver<Matrix> eb(w.between);
    if (eb.eigenvalues().minCoeff() <= 0.0) throw std::invalid_argument("make_world: exact moments need B* > 0");
    Vector centre = Vector::Zero(static_cast<Eigen::Index>(p.dim));
    for (const auto& m : w.means) centre += m;
    centre /= static_cast<double>(p.n_speakers);
    Matrix c = Matrix::Zero(centre.size(), centre.size());
    for (auto& m : w.means) {
      m -= centre;
      c += m * m.transpose();
    }
    c /= static_cast<double>(p.n_speakers);
    Eigen::SelfAdjointEigenSolver<Matrix> ec(c);
    const Matrix c_inv_sqrt =
        ec.eigenvectors() * ec.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * ec.eigenvectors().transpose();
    const Matrix t = sb * c_inv_sqrt;
    for (auto& m : w.means) m = t * m;
  }
  for (std::size_t s = 0; s < p.n_distractors; ++s) {
    w.distractors.push_back(numbered("dis", s));
    w.distractor_means.push_back(sample_gaussian(rng, sb));
  }
  return w;
}

namespace {

GeneratedEmbeddings gen_for(const std::vector<std::string>& names, const std::vector<Vector>& means,
                            const Matrix& within, std::size_t per, std::uint64_t seed, const std::string& tag) {
  std::mt19937_64 rng(seed);
  const Matrix sw = psd_sqrt(within);
  GeneratedEmbeddings out;
  for (std::size_t s = 0; s < names.size(); ++s) {
    for (std::size_t k = 0; k < per; ++k) {
      out.set.add(names[s] + "/" + tag + "/" + std::to_string(k), names[s], means[s] + sample_gaussian(rng, sw));
      out.truth.push_back(names[s]);
    }
  }
  return out;
}

}  // namespace

GeneratedEmbeddings gen_embeddings(const SpeakerWorld& world, std::size_t utts_per_speaker, std::uint64_t seed,
                                   const std::string& video_tag) {
  return gen_for(world.speakers, world.means, world.within, utts_per_speaker, seed, video_tag);
}

GeneratedEmbeddings gen_distractor_pool(const SpeakerWorld& world, std::size_t utts_per_distractor,
                                        std::uint64_t seed) {
  return gen_for(world.distractors, world.distractor_means, world.within, utts_per_distractor, seed, "pool");
}

ContaminationPlan make_contamination_plan(const LabeledEmbeddingSet& corpus, const GeneratedEmbeddings& pool,
                                          double rate, std::uint64_t seed) {
  if (!(rate >= 0.0 && rate < 1.0)) throw std::invalid_argument("contamination rate must lie in [0, 1)");
  std::vector<std::string> order;
  std::vector<std::size_t> counts;
  for (const auto& l : corpus.labels) {
    auto it = std::find(order.begin(), order.end(), l);
    if (it == order.end()) {
      order.push_back(l);
      counts.push_back(1);
    } else {
      ++counts[static_cast<std::size_t>(it - order.begin())];
    }
  }
  ContaminationPlan plan;
  plan.rate = rate;
  std::size_t needed = 0;
  std::vector<std::size_t> foreign(order.size());
  for (std::size_t s = 0; s < order.size(); ++s) {
    foreign[s] = static_cast<std::size_t>(std::llround(static_cast<double>(counts[s]) * rate / (1.0 - rate)));
    needed += foreign[s];
  }
  if (needed > pool.set.size()) {
    throw std::invalid_argument("contamination rate " + std::to_string(rate) + " needs " + std::to_string(needed) +
                                " foreign utterances but the pool has " + std::to_string(pool.set.size()));
  }
  std::vector<std::size_t> items(pool.set.size());
  std::iota(items.begin(), items.end(), 0);
  std::shuffle(items.begin(), items.end(), std::mt19937_64(seed));
  std::size_t next = 0;
  for (std::size_t s = 0; s < order.size(); ++s) {
    Injection inj;
    inj.victim = order[s];
    inj.pool_items.assign(items.begin() + static_cast<std::ptrdiff_t>(next),
                          items.begin() + static_cast<std::ptrdiff_t>(next + foreign[s]));
    next += foreign[s];
    plan.injections.push_back(std::move(inj));
  }
  return plan;
}

GeneratedEmbeddings inject_contamination(const GeneratedEmbeddings& corpus, const GeneratedEmbeddings& pool,
                                         const ContaminationPlan& plan) {
  GeneratedEmbeddings out = corpus;
  for (const auto& inj : plan.injections) {
    for (std::size_t k = 0; k < inj.pool_items.size(); ++k) {
      const auto item = inj.pool_items[k];
      if (item >= pool.set.size()) throw std::out_of_range("contamination plan refers past the pool");
      out.set.add(inj.victim + "/foreign/" + std::to_string(k), inj.victim, pool.set.vectors[item]);
      out.truth.push_back(pool.truth[item]);
    }
  }
  return out;
}

double purity(std::span<const std::string> labels, std::span<const std::string> truth) {
  if (labels.size() != truth.size()) throw std::invalid_argument("purity: length mismatch");
  if (labels.empty()) return 1.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) ok += labels[i] == truth[i] ? 1 : 0;
  return static_cast<double>(ok) / static_cast<double>(labels.size());
}

// --- frame streams ------------------------------------------------------------

void StreamScript::validate() const {
  if (n_frames == 0) throw std::invalid_argument("script: no frames");
  if (frame_ms <= 0) throw std::invalid_argument("script: frame_ms must be positive");
  if (bins < 2) throw std::invalid_argument("script: need at least two bins");
  if (!(jump > 0.0 && jump <= 2.0)) throw std::invalid_argument("script: jump must lie in (0, 2]");
  if (!(noise >= 0.0 && noise < 2.0)) throw std::invalid_argument("script: noise must lie in [0, 2)");
  if (!(face_noise >= 0.0)) throw std::invalid_argument("script: face_noise must be non-negative");
  for (std::size_t k = 0; k < cuts.size(); ++k) {
    if (cuts[k] == 0 || cuts[k] >= n_frames) throw std::invalid_argument("script: cut out of range");
    if (k > 0 && cuts[k] <= cuts[k - 1]) throw std::invalid_argument("script: cuts overlap or are unordered");
  }
  check_intervals(presence, n_frames, "presence");
  check_intervals(speaking, n_frames, "speaking");
  if (poi_face.empty()) throw std::invalid_argument("script: empty POI face");
  for (const auto& f : distractor_faces) {
    if (f.size() != poi_face.size()) throw std::invalid_argument("script: face dims differ");
  }
  for (std::size_t k = 0; k < switches.size(); ++k) {
    if (k > 0 && switches[k].frame <= switches[k - 1].frame) {
      throw std::invalid_argument("script: switches are unordered");
    }
    if (find_interval(presence, switches[k].frame) < 0) {
      throw std::invalid_argument("script: switch outside any presence interval");
    }
    if (switches[k].distractor >= distractor_faces.size()) {
      throw std::invalid_argument("script: switch names an unknown distractor");
    }
  }
}

std::uint32_t StreamTruth::visible_frames() const {
  return static_cast<std::uint32_t>(std::count(identity.begin(), identity.end(), 0));
}

SyntheticStream::SyntheticStream(StreamScript script) : script_(std::move(script)) {
  script_.validate();
  for (std::size_t s = 0; s <= script_.cuts.size(); ++s) bases_.push_back(shot_base(s));
  std::mt19937_64 rng(mix(script_.seed, kPatchStream));
  poi_patch_ = random_hist(rng, script_.bins);
  background_patch_ = random_hist(rng, script_.bins);
}

std::vector<float> SyntheticStream::shot_base(std::size_t shot) const {
  // Consecutive shots put their variable mass on disjoint bin parities, so
  // their bases are exactly `jump` apart in L1.
  std::mt19937_64 rng(mix(mix(script_.seed, kShotStream), shot));
  const auto u = random_hist(rng, script_.bins, static_cast<std::uint32_t>(shot % 2));
  const std::vector<float> flat(script_.bins, 1.0f / static_cast<float>(script_.bins));
  return blend(flat, u, script_.jump / 2.0);
}

std::size_t SyntheticStream::shot_of(std::uint32_t i) const {
  return static_cast<std::size_t>(std::upper_bound(script_.cuts.begin(), script_.cuts.end(), i) -
                                  script_.cuts.begin());
}

std::int32_t SyntheticStream::identity_at(std::uint32_t i) const {
  const auto p = find_interval(script_.presence, i);
  if (p < 0) return -1;
  const auto& iv = script_.presence[static_cast<std::size_t>(p)];
  std::int32_t who = 0;
  for (const auto& sw : script_.switches) {
    if (sw.frame > i) break;
    if (sw.frame >= iv.first) who = static_cast<std::int32_t>(sw.distractor) + 1;
  }
  return who;
}

FrameFeature SyntheticStream::frame(std::uint32_t i) const {
  if (i >= script_.n_frames) throw std::out_of_range("frame index past the script");
  std::mt19937_64 rng(mix(mix(script_.seed, kFrameStream), i));
  FrameFeature f;
  f.index = i;
  f.t_ms = static_cast<std::uint32_t>(static_cast<Milliseconds>(i) * script_.frame_ms);
  const auto r = random_hist(rng, script_.bins);
  f.hist = blend(bases_[shot_of(i)], r, script_.noise / 2.0);

  std::vector<FaceObservation> faces;
  const auto who = identity_at(i);
  if (who >= 0) {
    FaceObservation o;
    const auto dx = static_cast<std::int32_t>(std::lround(20.0 * std::sin(static_cast<double>(i) / 40.0)));
    o.bbox = {static_cast<std::uint32_t>(100 + dx), 80, 64, 64};
    const auto& face = who == 0 ? script_.poi_face : script_.distractor_faces[static_cast<std::size_t>(who - 1)];
    o.embedding = noisy_face(rng, face, script_.face_noise);
    o.patch_hist = blend(poi_patch_, random_hist(rng, script_.bins), 0.05);
    faces.push_back(std::move(o));
  }
  if (script_.background_face && !script_.distractor_faces.empty()) {
    FaceObservation o;
    o.bbox = {400, 90, 60, 60};
    o.embedding = noisy_face(rng, script_.distractor_faces.back(), script_.face_noise);
    o.patch_hist = blend(background_patch_, random_hist(rng, script_.bins), 0.05);
    faces.push_back(std::move(o));
  }
  f.detections = std::move(faces);
  return f;
}

std::optional<FrameFeature> SyntheticStream::next() {
  if (pos_ >= script_.n_frames) return std::nullopt;
  return frame(pos_++);
}

StreamTruth SyntheticStream::truth() const {
  StreamTruth t;
  t.cuts = script_.cuts;
  t.identity.resize(script_.n_frames);
  for (std::uint32_t i = 0; i < script_.n_frames; ++i) t.identity[i] = identity_at(i);
  return t;
}

SyncTrace SyntheticStream::sync_trace(const VideoId& video) const {
  SyncTrace trace{video, std::vector<float>(script_.n_frames)};
  std::mt19937_64 rng(mix(script_.seed, kSyncStream));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::uint32_t i = 0; i < script_.n_frames; ++i) {
    const bool talking = find_interval(script_.speaking, i) >= 0;
    trace.confidence[i] = static_cast<float>(talking ? 0.8 + 0.15 * u(rng) : 0.05 + 0.3 * u(rng));
  }
  return trace;
}

std::vector<double> random_unit(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n01;
  std::vector<double> v(dim);
  double norm = 0.0;
  for (auto& x : v) {
    x = n01(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (auto& x : v) x /= norm;
  return v;
}

std::vector<double> lookalike(const std::vector<double>& face, const std::vector<double>& other, double similarity) {
  if (face.size() != other.size()) throw std::invalid_argument("lookalike: dims differ");
  if (!(similarity >= -1.0 && similarity <= 1.0)) throw std::invalid_argument("lookalike: similarity outside [-1, 1]");
  double dot = 0.0;
  for (std::size_t k = 0; k < face.size(); ++k) dot += face[k] * other[k];
  std::vector<double> orth(face.size());
  double norm = 0.0;
  for (std::size_t k = 0; k < face.size(); ++k) {
    orth[k] = other[k] - dot * face[k];
    norm += orth[k] * orth[k];
  }
  norm = std::sqrt(norm);
  if (norm < 1e-12) throw std::invalid_argument("lookalike: other is parallel to face");
  const double rest = std::sqrt(1.0 - similarity * similarity);
  std::vector<double> out(face.size());
  for (std::size_t k = 0; k < face.size(); ++k) out[k] = similarity * face[k] + rest * orth[k] / norm;
  return out;
}

StreamScript make_interview_script(const InterviewParams& p, const std::vector<double>& poi_face,
                                   const std::vector<std::vector<double>>& distractor_faces, std::uint64_t seed) {
  if (p.min_shot == 0 || p.min_shot > p.max_shot) throw std::invalid_argument("interview: bad shot length range");
  if (!(p.presence >= 0.0 && p.presence <= 1.0)) throw std::invalid_argument("interview: presence must lie in [0, 1]");
  if (!(p.switch_rate >= 0.0 && p.switch_rate <= 1.0)) {
    throw std::invalid_argument("interview: switch_rate must lie in [0, 1]");
  }
  std::mt19937_64 rng(seed);
  StreamScript s;
  s.n_frames = p.n_frames;
  s.frame_ms = p.frame_ms;
  s.bins = p.bins;
  s.poi_face = poi_face;
  s.distractor_faces = distractor_faces;
  s.face_noise = p.face_noise;
  s.seed = mix(seed, 1);

  std::uniform_int_distribution<std::uint32_t> shot_len(p.min_shot, p.max_shot);
  std::uint32_t cursor = 0;
  for (;;) {
    const std::uint32_t next = cursor + shot_len(rng);
    if (next + p.min_shot > p.n_frames) break;  // the remainder joins the last shot
    s.cuts.push_back(next);
    cursor = next;
  }

  std::vector<std::uint32_t> starts{0};
  starts.insert(starts.end(), s.cuts.begin(), s.cuts.end());
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const std::uint32_t last = k + 1 < starts.size() ? starts[k + 1] - 1 : p.n_frames - 1;
    const std::uint32_t len = last - starts[k] + 1;
    const auto on = static_cast<std::uint32_t>(std::lround(p.presence * len));
    if (on > 0) s.presence.push_back({last - on + 1, last});
  }

  const std::size_t switch_pool = s.distractor_faces.size() > 1 ? s.distractor_faces.size() - 1
                                                                : s.distractor_faces.size();
  if (p.switch_rate > 0.0 && switch_pool > 0) {
    std::vector<std::size_t> eligible;
    for (std::size_t k = 0; k < s.presence.size(); ++k) {
      if (s.presence[k].last - s.presence[k].first > p.switch_offset) eligible.push_back(k);
    }
    auto n = static_cast<std::size_t>(std::lround(p.switch_rate * static_cast<double>(s.presence.size())));
    n = std::min(n, eligible.size());
    std::shuffle(eligible.begin(), eligible.end(), rng);
    eligible.resize(n);
    std::sort(eligible.begin(), eligible.end());
    std::uniform_int_distribution<std::size_t> who(0, switch_pool - 1);
    for (auto k : eligible) s.switches.push_back({s.presence[k].first + p.switch_offset, who(rng)});
  }

  std::uniform_real_distribution<double> talk(p.talk_min_s, p.talk_max_s);
  std::uniform_real_distribution<double> pause(p.pause_min_s, p.pause_max_s);
  const double frames_per_s = 1000.0 / static_cast<double>(p.frame_ms);
  for (const auto& iv : s.presence) {
    std::uint64_t at = iv.first;
    while (at <= iv.last) {
      const auto run = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(talk(rng) * frames_per_s));
      const auto end = std::min<std::uint64_t>(iv.last, at + run - 1);
      s.speaking.push_back({static_cast<std::uint32_t>(at), static_cast<std::uint32_t>(end)});
      at = end + 1 + std::max<std::uint64_t>(1, static_cast<std::uint64_t>(pause(rng) * frames_per_s));
    }
  }
  s.validate();
  return s;
}

nlohmann::json to_json(const StreamTruth& t) {
  nlohmann::json runs = nlohmann::json::array();
  std::size_t i = 0;
  while (i < t.identity.size()) {
    std::size_t j = i;
    while (j + 1 < t.identity.size() && t.identity[j + 1] == t.identity[i]) ++j;
    runs.push_back({i, j, t.identity[i]});
    i = j + 1;
  }
  return {{"n_frames", t.identity.size()}, {"cuts", t.cuts}, {"identity_runs", runs}};
}

StreamTruth stream_truth_from_json(const nlohmann::json& j) {
  StreamTruth t;
  t.cuts = j.at("cuts").get<std::vector<std::uint32_t>>();
  t.identity.assign(j.at("n_frames").get<std::size_t>(), -1);
  for (const auto& r : j.at("identity_runs")) {
    const auto a = r.at(0).get<std::size_t>();
    const auto b = r.at(1).get<std::size_t>();
    if (a > b || b >= t.identity.size()) throw std::invalid_argument("truth: identity run out of range");
    std::fill(t.identity.begin() + static_cast<std::ptrdiff_t>(a), t.identity.begin() + static_cast<std::ptrdiff_t>(b + 1),
              r.at(2).get<std::int32_t>());
  }
  return t;
}

std::vector<Embedding> gen_face_crops(const std::vector<double>& poi_face,
                                      const std::vector<std::vector<double>>& distractor_faces, std::size_t own,
                                      std::size_t others, double noise, std::uint64_t seed,
                                      const std::string& id_prefix) {
  if (others > 0 && distractor_faces.empty()) throw std::invalid_argument("face crops: no distractor faces");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<float>> crops;
  for (std::size_t k = 0; k < own; ++k) crops.push_back(noisy_face(rng, poi_face, noise));
  std::uniform_int_distribution<std::size_t> pick(0, distractor_faces.empty() ? 0 : distractor_faces.size() - 1);
  for (std::size_t k = 0; k < others; ++k) crops.push_back(noisy_face(rng, distractor_faces[pick(rng)], noise));
  std::shuffle(crops.begin(), crops.end(), rng);
  std::vector<Embedding> out;
  for (std::size_t k = 0; k < crops.size(); ++k) {
    out.push_back({id_prefix + std::to_string(k), std::move(crops[k])});
  }
  return out;
}

}  // namespace avcurate
