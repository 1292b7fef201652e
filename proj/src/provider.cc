#include "avcurate/provider.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include "avcurate/embedding_io.h"

namespace avcurate {

namespace fs = std::filesystem;

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string language_for(const std::string& nationality) {
  if (nationality == "Chinese") return "zh";
  if (nationality == "Japanese") return "ja";
  if (nationality == "South Korean" || nationality == "Korean") return "ko";
  return "en";
}

const QuerySuffixes& suffixes_for(const ProviderConfig& cfg, const std::string& nationality) {
  if (auto it = cfg.queries.find(language_for(nationality)); it != cfg.queries.end()) return it->second;
  if (auto it = cfg.queries.find("en"); it != cfg.queries.end()) return it->second;
  static const QuerySuffixes defaults;
  return defaults;
}

namespace {

std::string two_digits(std::size_t k) {
  std::ostringstream os;
  os << std::setw(2) << std::setfill('0') << k;
  return os.str();
}

constexpr double kLookalikeSimilarity = 0.75;

std::uint64_t derive(std::uint64_t seed, const std::string& what) { return seed ^ stable_hash(what); }

}  // namespace

MockWorld::MockWorld(const SynthConfig& cfg, std::uint64_t seed) : cfg_(cfg), seed_(seed) {
  if (cfg.distractors < 2) throw std::invalid_argument("mock world needs at least two distractors");
  static const char* kNationalities[] = {"Chinese", "Japanese", "South Korean"};
  WorldParams wp;
  wp.n_speakers = cfg.speakers;
  wp.n_distractors = cfg.distractors;
  wp.dim = cfg.voice_dim;
  wp.between_scale = cfg.between_scale;
  wp.within_scale = cfg.within_scale;
  wp.seed = derive(seed, "voices");
  voices_ = make_world(wp);
  for (std::size_t s = 0; s < cfg.speakers; ++s) {
    std::ostringstream name;
    name << "POI " << std::setw(3) << std::setfill('0') << s;
    speakers_.push_back({SpeakerId(voices_.speakers[s]), name.str(), kNationalities[s % 3]});
    faces_.push_back(random_unit(cfg.face_dim, derive(seed, "face/" + voices_.speakers[s])));
  }
  for (std::size_t k = 0; k < cfg.distractors; ++k) {
    distractor_faces_.push_back(random_unit(cfg.face_dim, derive(seed, "face/" + voices_.distractors[k])));
  }
}

std::ptrdiff_t MockWorld::speaker_index(const std::string& name) const {
  for (std::size_t s = 0; s < speakers_.size(); ++s) {
    if (speakers_[s].name == name) return static_cast<std::ptrdiff_t>(s);
  }
  return -1;
}

std::size_t MockWorld::own_images(std::size_t speaker) const {
  // The last `weak_speakers` POI have one crop short of a template.
  return speaker + cfg_.weak_speakers >= speakers_.size() ? 9 : cfg_.own_images;
}

std::vector<Embedding> MockWorld::image(std::size_t speaker, std::size_t k, std::size_t total) const {
  const auto own = std::min(own_images(speaker), total);
  const auto& id = speakers_.at(speaker).id.str();
  auto crops = gen_face_crops(faces_[speaker], distractor_faces_, own, total - own, cfg_.face_noise,
                              derive(seed_, "images/" + id), id + "-img-");
  return {crops.at(k)};
}

std::string MockWorld::video_id(const SpeakerInfo& s, std::size_t k) { return s.id.str() + "-v" + two_digits(k); }

StreamScript MockWorld::video_script(std::size_t speaker, std::size_t k) const {
  InterviewParams p;
  p.n_frames = cfg_.frames_per_video;
  p.bins = cfg_.bins;
  p.presence = cfg_.presence;
  p.switch_rate = cfg_.switch_rate;
  p.face_noise = cfg_.face_noise;
  const auto vid = video_id(speakers_.at(speaker), k);
  // Switch candidates look like the POI closely enough to pass verification;
  // the background face (last distractor) stays a stranger.
  auto faces = distractor_faces_;
  for (std::size_t d = 0; d + 1 < faces.size(); ++d) faces[d] = lookalike(faces_[speaker], faces[d], kLookalikeSimilarity);
  return make_interview_script(p, faces_[speaker], faces, derive(seed_, "video/" + vid));
}

Vector MockWorld::voice(const std::string& speaker, std::int32_t identity, const std::string& utterance) const {
  const Vector& mean =
      identity > 0 ? voices_.distractor_means.at(static_cast<std::size_t>(identity - 1)) : voices_.mean_of(speaker);
  std::mt19937_64 rng(derive(seed_, "voice/" + utterance));
  std::normal_distribution<double> n01;
  Vector z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = n01(rng);
  return mean + std::sqrt(cfg_.within_scale) * z;
}

MockProvider::MockProvider(const MockWorld& world, const ProviderConfig& cfg, fs::path truth_dir)
    : world_(world), cfg_(cfg), truth_dir_(std::move(truth_dir)) {}

std::vector<std::string> MockProvider::search(const std::string& name, const std::string& suffix,
                                              std::size_t limit) const {
  const auto s = world_.speaker_index(name);
  if (s < 0) return {};
  const auto& info = world_.speakers()[static_cast<std::size_t>(s)];
  const auto& q = suffixes_for(cfg_, info.nationality);
  std::vector<std::string> out;
  if (suffix == q.face || suffix == q.photo) {
    for (std::size_t k = 0; k < std::min(limit, cfg_.images); ++k) out.push_back(info.id.str() + "-img-" + two_digits(k));
  } else if (suffix == q.interview) {
    const auto n = std::min({limit, cfg_.videos, world_.config().videos_per_speaker});
    for (std::size_t k = 0; k < n; ++k) out.push_back(MockWorld::video_id(info, k));
  }
  return out;
}

FetchedMedia MockProvider::fetch(const std::string& id, const fs::path& media_dir) const {
  auto parse_tail = [&](std::size_t at, std::size_t skip) -> std::pair<std::size_t, std::size_t> {
    const auto spk = id.substr(0, at);
    std::size_t s = world_.speakers().size();
    for (std::size_t i = 0; i < world_.speakers().size(); ++i) {
      if (world_.speakers()[i].id.str() == spk) s = i;
    }
    const auto tail = id.substr(at + skip);
    if (s == world_.speakers().size() || tail.empty() || tail.find_first_not_of("0123456789") != std::string::npos) {
      throw std::invalid_argument("mock provider: unknown media id '" + id + "'");
    }
    return {s, static_cast<std::size_t>(std::stoul(tail))};
  };

  FetchedMedia out;
  if (const auto at = id.find("-img-"); at != std::string::npos) {
    const auto [s, k] = parse_tail(at, 5);
    if (k >= cfg_.images) throw std::invalid_argument("mock provider: unknown media id '" + id + "'");
    out.kind = MediaKind::kImage;
    const auto dir = media_dir / "images";
    fs::create_directories(dir);
    EmbeddingSet set;
    set.dim = static_cast<std::uint32_t>(world_.config().face_dim);
    set.items = world_.image(s, k, cfg_.images);
    const auto path = dir / (id + ".emb");
    write_embeddings(path, set);
    out.files.push_back(path);
    return out;
  }
  const auto at = id.rfind("-v");
  if (at == std::string::npos) throw std::invalid_argument("mock provider: unknown media id '" + id + "'");
  const auto [s, k] = parse_tail(at, 2);
  if (k >= world_.config().videos_per_speaker) {
    throw std::invalid_argument("mock provider: unknown media id '" + id + "'");
  }
  out.kind = MediaKind::kVideo;
  const auto dir = media_dir / "videos";
  fs::create_directories(dir);
  fs::create_directories(truth_dir_);
  SyntheticStream stream(world_.video_script(s, k));
  const auto frf = dir / (id + ".frf");
  FrameWriter writer(frf, stream.script().bins, static_cast<std::uint32_t>(stream.script().poi_face.size()));
  while (auto f = stream.next()) writer.write(*f);
  writer.close();
  const auto syn = dir / (id + ".syn");
  write_sync_trace(syn, stream.sync_trace(VideoId(id)));
  std::ofstream(truth_dir_ / (id + ".truth.json")) << to_json(stream.truth()).dump(1) << '\n';
  out.files = {frf, syn};
  return out;
}

}  // namespace avcurate
