#include "avcurate/pipeline.h"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "avcurate/backend.h"
#include "avcurate/binary_io.h"
#include "avcurate/diarize.h"
#include "avcurate/embedding_io.h"
#include "avcurate/manifest.h"
#include "avcurate/parallel.h"
#include "avcurate/provider.h"
#include "avcurate/segments.h"
#include "avcurate/shots.h"
#include "avcurate/tracker.h"
#include "avcurate/verification.h"

namespace avcurate {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kTrialSeedSalt = 0x9E3779B97F4A7C15ULL;

struct Layout {
  fs::path root;

  fs::path manifest() const { return root / "manifest.json"; }
  fs::path world() const { return root / "world.json"; }
  fs::path media() const { return root / "media"; }
  fs::path catalog() const { return root / "media" / "catalog.json"; }
  fs::path truth() const { return root / "truth"; }
  fs::path templates() const { return root / "templates"; }
  fs::path template_summary() const { return root / "templates" / "summary.json"; }
  fs::path shots() const { return root / "shots"; }
  fs::path tracks() const { return root / "tracks"; }
  fs::path track_summary() const { return root / "tracks" / "summary.json"; }
  fs::path xvectors() const { return root / "xvectors" / "xvectors.emb"; }
  fs::path backend() const { return root / "backend" / "backend.plda"; }
  fs::path split() const { return root / "backend" / "split.json"; }
  fs::path clean() const { return root / "clean"; }
  fs::path eval() const { return root / "eval"; }
  fs::path sweep() const { return root / "sweep"; }
  fs::path report() const { return root / "report"; }
};

std::string rel(const Layout& l, const fs::path& p) { return fs::relative(p, l.root).generic_string(); }

void require_stage(const fs::path& p, const std::string& needed_by, const std::string& stage) {
  if (!fs::exists(p)) {
    throw StageOrderError(needed_by + " needs the output of `" + stage + "` (" + p.filename().string() +
                          " not found); run `avcurate " + stage + "` first");
  }
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) throw MissingInputError("cannot open " + p.string());
  auto j = json::parse(is, nullptr, false);
  if (j.is_discarded()) throw FormatError(FormatErrorKind::kInvalidValue, p.string() + ": malformed JSON");
  return j;
}

void write_json(const fs::path& p, const json& j) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw FormatError(FormatErrorKind::kIo, "cannot write " + p.string());
  os << j.dump(2) << '\n';
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream os(p, std::ios::trunc);
  if (!os) throw FormatError(FormatErrorKind::kIo, "cannot write " + p.string());
  os << text;
}

CorpusManifest read_manifest(const Layout& l) {
  if (!fs::exists(l.manifest())) {
    throw MissingInputError("no manifest.json under " + l.root.string() + "; run `avcurate synth` or supply one");
  }
  try {
    return load_manifest(l.manifest(), l.root);
  } catch (const FormatError& e) {
    if (e.kind() != FormatErrorKind::kInvalidValue) throw;
    throw ConfigError(std::string("manifest schema: ") + e.what());
  }
}

// --- synthetic world ----------------------------------------------------------

json synth_to_json(const SynthConfig& s, std::uint64_t seed) {
  return {{"seed", seed},
          {"speakers", s.speakers},
          {"distractors", s.distractors},
          {"face_dim", s.face_dim},
          {"voice_dim", s.voice_dim},
          {"bins", s.bins},
          {"own_images", s.own_images},
          {"weak_speakers", s.weak_speakers},
          {"videos_per_speaker", s.videos_per_speaker},
          {"frames_per_video", s.frames_per_video},
          {"presence", s.presence},
          {"switch_rate", s.switch_rate},
          {"between_scale", s.between_scale},
          {"within_scale", s.within_scale},
          {"face_noise", s.face_noise}};
}

MockWorld load_world(const Layout& l) {
  if (!fs::exists(l.world())) {
    throw MissingInputError("the mock provider needs world.json; run `avcurate synth` first");
  }
  const auto j = read_json(l.world());
  try {
    SynthConfig s;
    s.speakers = j.at("speakers").get<std::size_t>();
    s.distractors = j.at("distractors").get<std::size_t>();
    s.face_dim = j.at("face_dim").get<std::size_t>();
    s.voice_dim = j.at("voice_dim").get<std::size_t>();
    s.bins = j.at("bins").get<std::uint32_t>();
    s.own_images = j.at("own_images").get<std::size_t>();
    s.weak_speakers = j.at("weak_speakers").get<std::size_t>();
    s.videos_per_speaker = j.at("videos_per_speaker").get<std::size_t>();
    s.frames_per_video = j.at("frames_per_video").get<std::uint32_t>();
    s.presence = j.at("presence").get<double>();
    s.switch_rate = j.at("switch_rate").get<double>();
    s.between_scale = j.at("between_scale").get<double>();
    s.within_scale = j.at("within_scale").get<double>();
    s.face_noise = j.at("face_noise").get<double>();
    return MockWorld(s, j.at("seed").get<std::uint64_t>());
  } catch (const json::exception& e) {
    throw FormatError(FormatErrorKind::kInvalidValue, "world.json: " + std::string(e.what()));
  }
}

void cmd_synth_world(const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  fs::create_directories(l.root);
  const MockWorld world(cfg.synth, cfg.seed);
  write_json(l.world(), synth_to_json(cfg.synth, cfg.seed));
  CorpusManifest m;
  m.speakers = world.speakers();
  save_manifest(l.manifest(), m);
  out << "synth: world with " << m.speakers.size() << " POI and " << cfg.synth.distractors << " distractors\n";
}

// Majority identity over the frames a segment covers.
std::int32_t segment_identity(const StreamTruth& truth, const SegmentRecord& s, Milliseconds frame_ms) {
  std::map<std::int32_t, std::size_t> votes;
  const auto first = static_cast<std::size_t>(s.start_ms / frame_ms);
  const auto last = static_cast<std::size_t>((s.end_ms + frame_ms - 1) / frame_ms);
  for (std::size_t f = first; f < last && f < truth.identity.size(); ++f) ++votes[truth.identity[f]];
  std::int32_t best = 0;
  std::size_t best_n = 0;
  for (const auto& [who, n] : votes) {
    if (who >= 0 && n > best_n) {
      best = who;
      best_n = n;
    }
  }
  return best;
}

void cmd_synth_xvectors(const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  auto m = read_manifest(l);
  const auto world = load_world(l);
  if (m.segments.empty()) throw StageOrderError("synth --stage xvectors needs segments; run `avcurate segments` first");
  std::map<std::string, StreamTruth> truths;
  EmbeddingSet set;
  set.dim = static_cast<std::uint32_t>(world.config().voice_dim);
  json sources = json::object();
  std::size_t foreign = 0;
  for (const auto& s : m.segments) {
    const auto vid = s.video.str();
    if (!truths.contains(vid)) {
      truths[vid] = stream_truth_from_json(read_json(l.truth() / (vid + ".truth.json")));
    }
    const auto who = segment_identity(truths[vid], s, cfg.track.frame_ms);
    const auto utt = s.utterance_id().str();
    const Vector v = world.voice(s.speaker.str(), who, utt);
    Embedding e{utt, std::vector<float>(static_cast<std::size_t>(v.size()))};
    for (Eigen::Index k = 0; k < v.size(); ++k) e.values[static_cast<std::size_t>(k)] = static_cast<float>(v[k]);
    set.items.push_back(std::move(e));
    sources[utt] = who > 0 ? world.voices().distractors[static_cast<std::size_t>(who - 1)] : s.speaker.str();
    foreign += who > 0 ? 1 : 0;
  }
  fs::create_directories(l.xvectors().parent_path());
  write_embeddings(l.xvectors(), set);
  write_json(l.truth() / "xvectors.truth.json", sources);
  const auto name = rel(l, l.xvectors());
  if (std::find(m.embedding_files.begin(), m.embedding_files.end(), name) == m.embedding_files.end()) {
    m.embedding_files.push_back(name);
  }
  save_manifest(l.manifest(), m);
  out << "synth: " << set.items.size() << " x-vectors (" << foreign << " from another identity)\n";
}

std::unique_ptr<MediaProvider> make_provider(const RunOptions& opts, const Layout& l, const PipelineConfig& cfg,
                                             std::unique_ptr<MockWorld>& world) {
  if (opts.provider != "mock") throw ConfigError("unknown provider '" + opts.provider + "'; only mock is available");
  world = std::make_unique<MockWorld>(load_world(l));
  return std::make_unique<MockProvider>(*world, cfg.provider, l.truth());
}

// --- template / shots / track / segments --------------------------------------

void cmd_template(const RunOptions& opts, const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  const auto m = read_manifest(l);
  std::unique_ptr<MockWorld> world;
  const auto provider = make_provider(opts, l, cfg, world);
  std::vector<json> rows(m.speakers.size());
  fs::create_directories(l.templates());
  parallel_for(m.speakers.size(), cfg.jobs, [&](std::size_t s) {
    const auto& info = m.speakers[s];
    const auto& q = suffixes_for(cfg.provider, info.nationality);
    std::vector<Embedding> faces;
    for (const auto& id : provider->search(info.name, q.face, cfg.provider.images)) {
      for (const auto& f : provider->fetch(id, l.media()).files) {
        auto set = read_embeddings(f);
        for (auto& e : set.items) faces.push_back(std::move(e));
      }
    }
    const auto outcome = build_template(info.id, faces, cfg.templates);
    if (const auto* t = std::get_if<TemplateFace>(&outcome)) {
      EmbeddingSet set{static_cast<std::uint32_t>(t->vector.dim()), {t->vector}};
      write_embeddings(l.templates() / (info.id.str() + ".emb"), set);
      rows[s] = {{"speaker", info.id.str()}, {"status", "accepted"}, {"support", t->support}, {"images", faces.size()}};
    } else {
      const auto& r = std::get<TemplateRejection>(outcome);
      fs::remove(l.templates() / (info.id.str() + ".emb"));
      rows[s] = {{"speaker", info.id.str()}, {"status", "rejected"}, {"support", r.largest_support},
                 {"images", faces.size()}};
    }
  });
  std::size_t accepted = 0;
  for (const auto& r : rows) accepted += r["status"] == "accepted" ? 1 : 0;
  write_json(l.template_summary(), {{"min_support", cfg.templates.min_support}, {"speakers", rows}});
  out << "template: " << accepted << " accepted, " << rows.size() - accepted << " rejected (support < "
      << cfg.templates.min_support << ")\n";
}

void fs_create(const fs::path& p) { fs::create_directories(p); }

json shot_json(const Shot& s) {
  return {{"start_frame", s.start_frame}, {"end_frame", s.end_frame}, {"start_ms", s.start_ms}, {"end_ms", s.end_ms}};
}

Shot shot_from_json(const json& j) {
  Shot s;
  s.start_frame = j.at("start_frame").get<std::uint32_t>();
  s.end_frame = j.at("end_frame").get<std::uint32_t>();
  s.start_ms = j.at("start_ms").get<Milliseconds>();
  s.end_ms = j.at("end_ms").get<Milliseconds>();
  return s;
}

json track_json(const TrackSegment& t) {
  return {{"start_frame", t.start_frame},         {"end_frame", t.end_frame},   {"start_ms", t.start_ms},
          {"end_ms", t.end_ms},                   {"mean_similarity", t.mean_similarity},
          {"end_reason", to_string(t.end_reason)}};
}

TrackSegment track_from_json(const VideoId& video, const json& j) {
  TrackSegment t;
  t.video = video;
  t.start_frame = j.at("start_frame").get<std::uint32_t>();
  t.end_frame = j.at("end_frame").get<std::uint32_t>();
  t.start_ms = j.at("start_ms").get<Milliseconds>();
  t.end_ms = j.at("end_ms").get<Milliseconds>();
  t.mean_similarity = j.at("mean_similarity").get<double>();
  return t;
}

json cost_json(const CostReport& c) {
  return {{"frames", c.frames},
          {"detections", c.detections},
          {"track_steps", c.track_steps},
          {"verifications", c.verifications},
          {"total", c.total}};
}

struct CatalogEntry {
  std::string video;
  std::string speaker;
  std::string frames;
  std::string sync;
};

std::vector<CatalogEntry> read_catalog(const Layout& l) {
  std::vector<CatalogEntry> out;
  const auto videos_doc = read_json(l.catalog());
  for (const auto& j : videos_doc.at("videos")) {
    out.push_back({j.at("video").get<std::string>(), j.at("speaker").get<std::string>(),
                   j.at("frames").get<std::string>(), j.at("sync").get<std::string>()});
  }
  return out;
}

void cmd_shots(const RunOptions& opts, const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  const auto m = read_manifest(l);
  require_stage(l.template_summary(), "shots", "template");
  std::set<std::string> accepted;
  const auto speakers_doc = read_json(l.template_summary());
  for (const auto& r : speakers_doc.at("speakers")) {
    if (r.at("status") == "accepted") accepted.insert(r.at("speaker").get<std::string>());
  }
  std::unique_ptr<MockWorld> world;
  const auto provider = make_provider(opts, l, cfg, world);

  std::vector<const SpeakerInfo*> todo;
  for (const auto& s : m.speakers) {
    if (accepted.contains(s.id.str())) todo.push_back(&s);
  }
  std::vector<std::vector<CatalogEntry>> found(todo.size());
  std::vector<std::size_t> shot_counts(todo.size(), 0);
  fs_create(l.shots());
  parallel_for(todo.size(), cfg.jobs, [&](std::size_t k) {
    const auto& info = *todo[k];
    const auto& q = suffixes_for(cfg.provider, info.nationality);
    for (const auto& id : provider->search(info.name, q.interview, cfg.provider.videos)) {
      const auto media = provider->fetch(id, l.media());
      if (media.kind != MediaKind::kVideo || media.files.size() != 2) continue;
      FrameFileSource src(media.files[0]);
      const auto shots = detect_shots(src, cfg.shots);
      json list = json::array();
      for (const auto& s : shots) list.push_back(shot_json(s));
      write_json(l.shots() / (id + ".json"), {{"video", id}, {"speaker", info.id.str()}, {"shots", list}});
      found[k].push_back({id, info.id.str(), rel(l, media.files[0]), rel(l, media.files[1])});
      shot_counts[k] += shots.size();
    }
  });
  json videos = json::array();
  std::size_t n_videos = 0, n_shots = 0;
  for (std::size_t k = 0; k < todo.size(); ++k) {
    n_shots += shot_counts[k];
    for (const auto& e : found[k]) {
      videos.push_back({{"video", e.video}, {"speaker", e.speaker}, {"frames", e.frames}, {"sync", e.sync}});
      ++n_videos;
    }
  }
  write_json(l.catalog(), {{"videos", videos}});
  out << "shots: " << n_videos << " videos, " << n_shots << " shots\n";
}

void cmd_track(const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  read_manifest(l);
  require_stage(l.template_summary(), "track", "template");
  require_stage(l.catalog(), "track", "shots");
  std::map<std::string, std::size_t> support;
  const auto speakers_doc = read_json(l.template_summary());
  for (const auto& r : speakers_doc.at("speakers")) {
    if (r.at("status") == "accepted") support[r.at("speaker").get<std::string>()] = r.at("support").get<std::size_t>();
  }
  const auto catalog = read_catalog(l);
  std::vector<SpeedupReport> reports(catalog.size());
  parallel_for(catalog.size(), cfg.jobs, [&](std::size_t k) {
    const auto& e = catalog[k];
    if (!support.contains(e.speaker)) throw StageOrderError("no template for " + e.speaker + "; rerun `avcurate template`");
    const auto shots_path = l.shots() / (e.video + ".json");
    require_stage(shots_path, "track", "shots");
    std::vector<Shot> shots;
    const auto shots_doc = read_json(shots_path);
    for (const auto& s : shots_doc.at("shots")) shots.push_back(shot_from_json(s));
    auto tset = read_embeddings(l.templates() / (e.speaker + ".emb"));
    if (tset.items.size() != 1) throw FormatError(FormatErrorKind::kInvalidValue, "template file must hold one vector");
    TemplateFace face{SpeakerId(e.speaker), tset.items.front(), support.at(e.speaker)};
    FrameFileSource src(l.root / e.frames);
    const VideoId video(e.video);
    reports[k] = compare_policies(src, shots, face, cfg.track, video);
    json segs = json::array();
    for (const auto& t : reports[k].segments) segs.push_back(track_json(t));
    write_json(l.tracks() / (e.video + ".json"),
               {{"video", e.video},
                {"speaker", e.speaker},
                {"segments", segs},
                {"cost", cost_json(reports[k].tracked)},
                {"baseline_cost", cost_json(reports[k].baseline)},
                {"frame_agreement", reports[k].frame_agreement}});
  });
  CostReport tracked, baseline;
  std::uint64_t common = 0, union_frames = 0, n_segments = 0;
  for (const auto& r : reports) {
    tracked += r.tracked;
    baseline += r.baseline;
    common += r.common_frames;
    union_frames += r.tracked_frames + r.baseline_frames - r.common_frames;
    n_segments += r.segments.size();
  }
  const double ratio = tracked.total > 0 ? baseline.total / tracked.total : 0.0;
  const double agreement = union_frames ? static_cast<double>(common) / static_cast<double>(union_frames) : 1.0;
  write_json(l.track_summary(), {{"videos", catalog.size()},
                                 {"segments", n_segments},
                                 {"cost", cost_json(tracked)},
                                 {"baseline_cost", cost_json(baseline)},
                                 {"cost_ratio", ratio},
                                 {"frame_agreement", agreement}});
  out << "track: " << n_segments << " tracks in " << catalog.size() << " videos, cost ratio " << std::fixed
      << std::setprecision(2) << ratio << ", frame agreement " << std::setprecision(3) << agreement << "\n";
}

void cmd_segments(const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  auto m = read_manifest(l);
  require_stage(l.track_summary(), "segments", "track");
  const auto catalog = read_catalog(l);
  std::vector<std::vector<SegmentRecord>> per_video(catalog.size());
  parallel_for(catalog.size(), cfg.jobs, [&](std::size_t k) {
    const auto& e = catalog[k];
    const VideoId video(e.video);
    const auto tpath = l.tracks() / (e.video + ".json");
    require_stage(tpath, "segments", "track");
    std::vector<TrackSegment> tracks;
    const auto segments_doc = read_json(tpath);
    for (const auto& t : segments_doc.at("segments")) tracks.push_back(track_from_json(video, t));
    const auto trace = read_sync_trace(l.root / e.sync, video);
    per_video[k] = extract_segments(tracks, trace, SpeakerId(e.speaker), cfg.segments);
  });
  m.segments.clear();
  for (auto& v : per_video) m.segments.insert(m.segments.end(), v.begin(), v.end());
  // Segments changed, so any embedding file is stale.
  m.embedding_files.clear();
  save_manifest(l.manifest(), m);
  out << "segments: " << m.segments.size() << " speech segments\n";
}

// --- backend / clean / eval / sweep -------------------------------------------

// Segments joined with their embeddings, in manifest order.
LabeledEmbeddingSet load_corpus(const Layout& l, const CorpusManifest& m, bool drop_cleaned) {
  if (m.embedding_files.empty()) {
    throw StageOrderError("the manifest lists no embedding files; run `avcurate synth --stage xvectors` or add them");
  }
  std::unordered_map<std::string, std::vector<float>> by_id;
  std::optional<std::uint32_t> dim;
  for (const auto& f : m.embedding_files) {
    auto set = read_embeddings(l.root / f, dim);
    dim = set.dim;
    for (auto& e : set.items) by_id[e.id] = std::move(e.values);
  }
  LabeledEmbeddingSet corpus;
  for (const auto& s : m.segments) {
    if (drop_cleaned && s.source == SegmentSource::kDiarizationDropped) continue;
    const auto id = s.utterance_id().str();
    auto it = by_id.find(id);
    if (it == by_id.end()) continue;
    Vector v(static_cast<Eigen::Index>(it->second.size()));
    for (std::size_t k = 0; k < it->second.size(); ++k) v[static_cast<Eigen::Index>(k)] = it->second[k];
    corpus.add(id, s.speaker.str(), std::move(v));
  }
  if (corpus.num_speakers() < 2) {
    throw FormatError(FormatErrorKind::kInvalidValue, "fewer than two speakers have embedded segments");
  }
  return corpus;
}

SpeakerSplit read_split(const Layout& l) {
  const auto j = read_json(l.split());
  return {j.at("train").get<std::vector<std::string>>(), j.at("test").get<std::vector<std::string>>()};
}

void cmd_backend(const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  const auto m = read_manifest(l);
  const auto corpus = load_corpus(l, m, false);
  const auto split = split_speakers(corpus, cfg.seed, cfg.train_fraction);
  const auto train = select_speakers(corpus, split.train);
  const auto fit = fit_backend(train, cfg.backend);
  fs::create_directories(l.backend().parent_path());
  save_backend(l.backend(), fit.backend);
  write_json(l.split(), {{"seed", cfg.seed}, {"train", split.train}, {"test", split.test}});
  write_json(l.backend().parent_path() / "fit.json", {{"train_utterances", train.size()},
                                                      {"train_speakers", split.train.size()},
                                                      {"input_dim", corpus.dim()},
                                                      {"lda_dim", fit.backend.lda.output_dim()},
                                                      {"length_norm", fit.backend.length_norm},
                                                      {"log_likelihood", fit.log_likelihood}});
  out << "backend: trained on " << train.size() << " utterances of " << split.train.size() << " speakers, lda dim "
      << fit.backend.lda.output_dim() << "\n";
}

double single_eps(const RunOptions& opts, const PipelineConfig& cfg) {
  if (!opts.eps) return cfg.clean_eps;
  if (opts.eps->size() != 1) throw ConfigError("clean takes exactly one --eps value");
  return opts.eps->front();
}

void cmd_clean(const RunOptions& opts, const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  auto m = read_manifest(l);
  require_stage(l.backend(), "clean", "backend");
  const auto backend = load_backend(l.backend());
  const auto corpus = load_corpus(l, m, false);
  const double eps = single_eps(opts, cfg);
  const auto cleaned = clean_corpus(backend, corpus, eps, cfg.clean_min_pts, cfg.jobs);

  std::set<std::string> kept(cleaned.kept.ids.begin(), cleaned.kept.ids.end());
  std::set<std::string> seen(corpus.ids.begin(), corpus.ids.end());
  for (auto& s : m.segments) {
    const auto id = s.utterance_id().str();
    if (!seen.contains(id)) continue;
    s.source = kept.contains(id) ? SegmentSource::kDiarizationKept : SegmentSource::kDiarizationDropped;
  }
  save_manifest(l.manifest(), m);

  json reports = json::array();
  json finetune = json::object();
  std::size_t degenerate = 0;
  for (const auto& r : cleaned.reports) {
    reports.push_back(to_json(r));
    finetune[r.speaker] = r.kept;
    degenerate += r.degenerate ? 1 : 0;
  }
  write_json(l.clean() / "cleaning.json", {{"eps", eps},
                                            {"min_pts", cfg.clean_min_pts},
                                            {"mean_vsr", cleaned.mean_vsr},
                                            {"kept", cleaned.kept.size()},
                                            {"total", corpus.size()},
                                            {"degenerate_speakers", degenerate},
                                            {"speakers", reports}});
  write_json(l.clean() / "finetune.json", finetune);
  out << "clean: eps " << eps << ", kept " << cleaned.kept.size() << " of " << corpus.size() << " (mean VSR "
      << std::fixed << std::setprecision(3) << cleaned.mean_vsr << ")";
  if (degenerate) out << ", " << degenerate << " speakers fell back to keep-all";
  out << "\n";
}

// Scores the stored backend on the stored split's test speakers.
Evaluation evaluate_stored(const Layout& l, const PipelineConfig& cfg, const LabeledEmbeddingSet& corpus,
                           const SpeakerSplit& split) {
  Evaluation ev;
  ev.split = split;
  ev.backend = load_backend(l.backend());
  ev.test = select_speakers(corpus, split.test);
  ev.trials = build_trials(ev.test, cfg.seed ^ kTrialSeedSalt);
  ev.scores = score_trials(ev.backend, ev.test, ev.trials.trials);
  ev.report = make_report(ev.scores, cfg.dcf);
  return ev;
}

void cmd_eval(const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  const auto m = read_manifest(l);
  require_stage(l.backend(), "eval", "backend");
  require_stage(l.split(), "eval", "backend");
  const auto split = read_split(l);
  const auto corpus = load_corpus(l, m, false);
  const auto before = evaluate_stored(l, cfg, corpus, split);
  std::ostringstream trials;
  write_trials(trials, before.test, before.trials.trials);
  write_text(l.eval() / "trials.txt", trials.str());

  json report = {{"before", to_json(before.report)}};
  const bool cleaned = std::any_of(m.segments.begin(), m.segments.end(),
                                   [](const SegmentRecord& s) { return s.source != SegmentSource::kTracked; });
  std::optional<VerificationReport> after;
  if (cleaned) {
    const auto kept = load_corpus(l, m, true);
    after = evaluate_split(select_speakers(kept, split.train), select_speakers(kept, split.test), cfg.backend,
                           cfg.seed ^ kTrialSeedSalt, cfg.dcf)
                .report;
    report["after"] = to_json(*after);
    report["clean"] = read_json(l.clean() / "cleaning.json").at("eps");
  }
  write_json(l.eval() / "report.json", report);
  out << std::fixed << "eval: EER " << std::setprecision(2) << before.report.eer << "%, minDCF "
      << std::setprecision(3) << before.report.min_dcf;
  if (after) {
    out << " | after cleaning: EER " << std::setprecision(2) << after->eer << "%, minDCF " << std::setprecision(3)
        << after->min_dcf;
  }
  out << "\n";
}

void cmd_sweep(const RunOptions& opts, const Layout& l, const PipelineConfig& cfg, std::ostream& out) {
  const auto m = read_manifest(l);
  require_stage(l.backend(), "sweep", "backend");
  require_stage(l.split(), "sweep", "backend");
  const auto split = read_split(l);
  const auto corpus = load_corpus(l, m, false);
  const auto before = evaluate_stored(l, cfg, corpus, split);
  const auto eps_list = opts.eps ? *opts.eps : cfg.sweep_eps;
  const auto rows = eps_sweep(
      before.backend, corpus, eps_list, cfg.clean_min_pts,
      [&](const CleanedCorpus& c) {
        return evaluate_split(select_speakers(c.kept, split.train), select_speakers(c.kept, split.test), cfg.backend,
                              cfg.seed ^ kTrialSeedSalt, cfg.dcf)
            .report;
      },
      cfg.jobs);
  json list = json::array();
  for (const auto& r : rows) list.push_back(to_json(r));
  write_json(l.sweep() / "sweep.json", {{"min_pts", cfg.clean_min_pts}, {"before", to_json(before.report)}, {"rows", list}});
  const auto table = format_sweep_table(rows, before.report);
  write_text(l.sweep() / "sweep.txt", table);
  out << table;
}

// --- report -------------------------------------------------------------------

void cmd_report(const Layout& l, std::ostream& out) {
  const auto m = read_manifest(l);
  const auto stats = corpus_statistics(m);
  json report = {{"statistics", to_json(stats)}};
  std::ostringstream text;
  text << "Corpus statistics\n" << format_statistics_table(stats);

  std::map<std::string, std::size_t> by_source;
  for (const auto& s : m.segments) ++by_source[to_string(s.source)];
  report["segments_by_source"] = by_source;
  if (!by_source.empty()) {
    text << "\nSegments by source\n";
    for (const auto& [k, n] : by_source) text << "  " << std::left << std::setw(22) << k << std::right << n << "\n";
  }
  if (fs::exists(l.template_summary())) {
    std::size_t acc = 0, rej = 0;
    const auto speakers_doc = read_json(l.template_summary());
    for (const auto& r : speakers_doc.at("speakers")) (r.at("status") == "accepted" ? acc : rej)++;
    report["templates"] = {{"accepted", acc}, {"rejected", rej}};
    text << "\nTemplates: " << acc << " accepted, " << rej << " rejected\n";
  }
  if (fs::exists(l.track_summary())) {
    const auto t = read_json(l.track_summary());
    report["tracking"] = t;
    text << std::fixed << "\nTracking: cost " << std::setprecision(0) << t.at("cost").at("total").get<double>()
         << " vs " << t.at("baseline_cost").at("total").get<double>() << " detect-every-frame (ratio "
         << std::setprecision(2) << t.at("cost_ratio").get<double>() << "), frame agreement " << std::setprecision(3)
         << t.at("frame_agreement").get<double>() << "\n";
  }
  if (fs::exists(l.eval() / "report.json")) {
    const auto e = read_json(l.eval() / "report.json");
    report["verification"] = e;
    text << std::fixed << "\nVerification          EER%    MinDCF\n";
    auto row = [&](const char* name, const json& r) {
      text << "  " << std::left << std::setw(18) << name << std::right << std::setw(7) << std::setprecision(2)
           << r.at("eer_percent").get<double>() << "  " << std::setw(8) << std::setprecision(3)
           << r.at("min_dcf").get<double>() << "\n";
    };
    row("before cleaning", e.at("before"));
    if (e.contains("after")) row("after cleaning", e.at("after"));
  }
  if (fs::exists(l.sweep() / "sweep.json")) {
    report["sweep"] = read_json(l.sweep() / "sweep.json");
    std::ifstream is(l.sweep() / "sweep.txt");
    std::stringstream buf;
    buf << is.rdbuf();
    text << "\nCleaning sweep\n" << buf.str();
  }
  write_json(l.report() / "report.json", report);
  write_text(l.report() / "report.txt", text.str());
  out << text.str();
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"template", "shots", "track", "segments", "clean",
                                              "backend",  "eval",  "sweep", "synth",    "report"};
  return names;
}

PipelineConfig resolve_config(const RunOptions& opts) {
  PipelineConfig cfg;
  if (opts.config) {
    if (!fs::exists(*opts.config)) throw MissingInputError("config file not found: " + opts.config->string());
    cfg = load_config(*opts.config);
  }
  for (const auto& o : opts.overrides) cfg.apply_override(o);
  if (opts.seed) cfg.seed = *opts.seed;
  if (opts.jobs) {
    if (*opts.jobs == 0) throw ConfigError("--jobs must be at least 1");
    cfg.jobs = *opts.jobs;
  }
  if (opts.eps) {
    for (double e : *opts.eps) {
      if (!(e >= 0.0)) throw ConfigError("--eps values must be non-negative");
    }
  }
  cfg.validate();
  return cfg;
}

void run_command(const std::string& command, const RunOptions& opts, std::ostream& out) {
  const auto cfg = resolve_config(opts);
  const Layout l{opts.root};
  if (command != "synth" && !fs::is_directory(l.root)) {
    throw MissingInputError("root directory not found: " + l.root.string());
  }
  if (command == "synth") {
    if (opts.stage == "world") {
      cmd_synth_world(l, cfg, out);
    } else if (opts.stage == "xvectors") {
      cmd_synth_xvectors(l, cfg, out);
    } else {
      throw ConfigError("unknown synth stage '" + opts.stage + "' (world or xvectors)");
    }
  } else if (command == "template") {
    cmd_template(opts, l, cfg, out);
  } else if (command == "shots") {
    cmd_shots(opts, l, cfg, out);
  } else if (command == "track") {
    cmd_track(l, cfg, out);
  } else if (command == "segments") {
    cmd_segments(l, cfg, out);
  } else if (command == "backend") {
    cmd_backend(l, cfg, out);
  } else if (command == "clean") {
    cmd_clean(opts, l, cfg, out);
  } else if (command == "eval") {
    cmd_eval(l, cfg, out);
  } else if (command == "sweep") {
    cmd_sweep(opts, l, cfg, out);
  } else if (command == "report") {
    cmd_report(l, out);
  } else {
    throw std::invalid_argument("unknown command '" + command + "'");
  }
}

int run_command_checked(const std::string& command, const RunOptions& opts, std::ostream& out, std::ostream& err) {
  try {
    run_command(command, opts, out);
    return static_cast<int>(ExitCode::kOk);
  } catch (const MissingInputError& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kMissingInput);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kConfig);
  } catch (const StageOrderError& e) {
    err << "stage order: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kStageOrder);
  } catch (const FormatError& e) {
    err << "format error: " << e.what() << "\n";
    return static_cast<int>(e.kind() == FormatErrorKind::kIo ? ExitCode::kMissingInput : ExitCode::kFormat);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return static_cast<int>(ExitCode::kInternal);
  }
}

}  // namespace avcurate
