#include "avcurate/config.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>

namespace avcurate {

namespace {

using nlohmann::json;

struct Field {
  std::function<void(PipelineConfig&, const json&)> set;
  std::function<json(const PipelineConfig&)> get;
};

json parse_value(const std::string& raw) {
  auto v = json::parse(raw, nullptr, false);
  if (v.is_discarded()) return json(raw);
  return v;
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

[[noreturn]] void bad(const std::string& key, const std::string& why) {
  throw ConfigError("config key '" + key + "': " + why);
}

double as_real(const std::string& key, const json& v, double lo, double hi) {
  if (!v.is_number()) bad(key, "expected a number, got " + v.dump());
  const double x = v.get<double>();
  if (!std::isfinite(x) || x < lo || x > hi) {
    std::ostringstream os;
    os << "value " << x << " outside [" << lo << ", " << hi << "]";
    bad(key, os.str());
  }
  return x;
}

std::uint64_t as_count(const std::string& key, const json& v, std::uint64_t lo, std::uint64_t hi) {
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    bad(key, "expected a non-negative integer, got " + v.dump());
  }
  const auto x = v.get<std::uint64_t>();
  if (x < lo || x > hi) bad(key, "value " + std::to_string(x) + " outside [" + std::to_string(lo) + ", " +
                                     std::to_string(hi) + "]");
  return x;
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::uint64_t kBig = 1ULL << 32;

template <typename Ref>
Field real(const std::string& key, Ref ref, double lo, double hi) {
  return {[=](PipelineConfig& c, const json& v) { ref(c) = as_real(key, v, lo, hi); },
          [=](const PipelineConfig& c) { return json(ref(const_cast<PipelineConfig&>(c))); }};
}

template <typename Ref>
Field count(const std::string& key, Ref ref, std::uint64_t lo, std::uint64_t hi) {
  return {[=](PipelineConfig& c, const json& v) {
            using T = std::remove_reference_t<decltype(ref(c))>;
            ref(c) = static_cast<T>(as_count(key, v, lo, hi));
          },
          [=](const PipelineConfig& c) { return json(ref(const_cast<PipelineConfig&>(c))); }};
}

#define REF(expr) [](PipelineConfig& c) -> auto& { return c.expr; }

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["template.eps"] = real("template.eps", REF(templates.eps), 0.0, 2.0);
    t["template.min_pts"] = count("template.min_pts", REF(templates.min_pts), 1, kBig);
    t["template.min_support"] = count("template.min_support", REF(templates.min_support), 1, kBig);
    t["shots.threshold"] = real("shots.threshold", REF(shots.threshold), 0.0, 2.0);
    t["shots.min_shot_len"] = count("shots.min_shot_len", REF(shots.min_shot_len), 1, kBig - 1);
    t["track.verify_threshold"] = real("track.verify_threshold", REF(track.verify_threshold), -1.0, 1.0);
    t["track.drift_threshold"] = real("track.drift_threshold", REF(track.drift_threshold), 0.0, 1.0);
    t["track.verify_interval"] = count("track.verify_interval", REF(track.verify_interval), 0, kBig - 1);
    t["cost.detect"] = real("cost.detect", REF(track.cost.c_detect), 0.0, 1e9);
    t["cost.track"] = real("cost.track", REF(track.cost.c_track), 0.0, 1e9);
    t["cost.verify"] = real("cost.verify", REF(track.cost.c_verify), 0.0, 1e9);
    t["frame_ms"] = {[](PipelineConfig& c, const json& v) {
                       c.track.frame_ms = c.segments.frame_ms =
                           static_cast<Milliseconds>(as_count("frame_ms", v, 1, 10000));
                     },
                     [](const PipelineConfig& c) { return json(c.track.frame_ms); }};
    t["segments.sync_threshold"] = real("segments.sync_threshold", REF(segments.sync_threshold), 0.0, 1.0);
    t["segments.max_gap_ms"] = count("segments.max_gap_ms", REF(segments.max_gap_ms), 0, kBig);
    t["segments.min_len_ms"] = count("segments.min_len_ms", REF(segments.min_len_ms), 1, kBig);
    t["segments.max_len_ms"] = count("segments.max_len_ms", REF(segments.max_len_ms), 1, kBig);
    t["backend.lda_dim"] = count("backend.lda_dim", REF(backend.lda_dim), 1, 100000);
    t["backend.length_norm"] = {[](PipelineConfig& c, const json& v) {
                                  if (!v.is_boolean()) bad("backend.length_norm", "expected true or false");
                                  c.backend.length_norm = v.get<bool>();
                                },
                                [](const PipelineConfig& c) { return json(c.backend.length_norm); }};
    t["backend.plda_iterations"] = count("backend.plda_iterations", REF(backend.plda.iterations), 1, 10000);
    t["backend.eigen_floor"] = real("backend.eigen_floor", REF(backend.plda.floor), 1e-15, 1.0);
    t["backend.train_fraction"] = real("backend.train_fraction", REF(train_fraction), 1e-6, 1.0 - 1e-6);
    t["clean.eps"] = real("clean.eps", REF(clean_eps), 0.0, 1e12);
    t["clean.min_pts"] = count("clean.min_pts", REF(clean_min_pts), 1, kBig);
    t["sweep.eps"] = {[](PipelineConfig& c, const json& v) {
                        // A JSON array, or the "70,80,100" form of --set and key=value files.
                        json list = v;
                        if (v.is_string()) {
                          list = json::array();
                          std::stringstream ss(v.get<std::string>());
                          for (std::string item; std::getline(ss, item, ',');) list.push_back(parse_value(trim(item)));
                        }
                        if (!list.is_array() || list.empty()) bad("sweep.eps", "expected a non-empty list of numbers");
                        std::vector<double> xs;
                        for (const auto& x : list) xs.push_back(as_real("sweep.eps", x, 0.0, 1e12));
                        c.sweep_eps = std::move(xs);
                      },
                      [](const PipelineConfig& c) { return json(c.sweep_eps); }};
    t["eval.p_target"] = real("eval.p_target", REF(dcf.p_target), 1e-9, 1.0 - 1e-9);
    t["eval.c_miss"] = real("eval.c_miss", REF(dcf.c_miss), 1e-12, 1e12);
    t["eval.c_fa"] = real("eval.c_fa", REF(dcf.c_fa), 1e-12, 1e12);
    t["seed"] = {[](PipelineConfig& c, const json& v) {
                   c.seed = as_count("seed", v, 0, std::numeric_limits<std::uint64_t>::max());
                 },
                 [](const PipelineConfig& c) { return json(c.seed); }};
    t["jobs"] = count("jobs", REF(jobs), 1, 1024);
    t["provider.images"] = count("provider.images", REF(provider.images), 1, 100000);
    t["provider.videos"] = count("provider.videos", REF(provider.videos), 1, 100000);
    t["synth.speakers"] = count("synth.speakers", REF(synth.speakers), 3, 100000);
    t["synth.distractors"] = count("synth.distractors", REF(synth.distractors), 2, 100000);
    t["synth.face_dim"] = count("synth.face_dim", REF(synth.face_dim), 2, 4096);
    t["synth.voice_dim"] = count("synth.voice_dim", REF(synth.voice_dim), 2, 4096);
    t["synth.bins"] = count("synth.bins", REF(synth.bins), 2, 65536);
    t["synth.own_images"] = count("synth.own_images", REF(synth.own_images), 0, 100000);
    t["synth.weak_speakers"] = count("synth.weak_speakers", REF(synth.weak_speakers), 0, 100000);
    t["synth.videos_per_speaker"] = count("synth.videos_per_speaker", REF(synth.videos_per_speaker), 1, 1000);
    t["synth.frames_per_video"] = count("synth.frames_per_video", REF(synth.frames_per_video), 100, 10000000);
    t["synth.presence"] = real("synth.presence", REF(synth.presence), 0.0, 1.0);
    t["synth.switch_rate"] = real("synth.switch_rate", REF(synth.switch_rate), 0.0, 1.0);
    t["synth.between_scale"] = real("synth.between_scale", REF(synth.between_scale), 1e-9, 1e9);
    t["synth.within_scale"] = real("synth.within_scale", REF(synth.within_scale), 0.0, 1e9);
    t["synth.face_noise"] = real("synth.face_noise", REF(synth.face_noise), 0.0, 10.0);
    return t;
  }();
  return table;
}

#undef REF

bool is_lang_tag(const std::string& s) {
  if (s.empty() || s.size() > 16) return false;
  for (char ch : s) {
    if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '-')) return false;
  }
  return true;
}

// query.<lang>.<face|photo|interview>
bool set_query(PipelineConfig& c, const std::string& key, const json& v) {
  if (key.rfind("query.", 0) != 0) return false;
  const auto dot = key.find('.', 6);
  if (dot == std::string::npos) bad(key, "expected query.<lang>.<face|photo|interview>");
  const auto lang = key.substr(6, dot - 6);
  const auto what = key.substr(dot + 1);
  if (!is_lang_tag(lang)) bad(key, "bad language tag '" + lang + "'");
  if (!v.is_string() || v.get<std::string>().empty()) bad(key, "expected a non-empty string");
  auto& q = c.provider.queries[lang];
  if (what == "face") {
    q.face = v.get<std::string>();
  } else if (what == "photo") {
    q.photo = v.get<std::string>();
  } else if (what == "interview") {
    q.interview = v.get<std::string>();
  } else {
    bad(key, "unknown query kind '" + what + "'");
  }
  return true;
}

void flatten(const json& j, const std::string& prefix, std::vector<std::pair<std::string, json>>& out) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, out);
    } else {
      out.emplace_back(key, *it);
    }
  }
}

}  // namespace

void PipelineConfig::set(const std::string& key, const json& value) {
  if (set_query(*this, key, value)) return;
  const auto& t = fields();
  auto it = t.find(key);
  if (it == t.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, value);
}

void PipelineConfig::apply_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' is not key=value");
  set(trim(assignment.substr(0, eq)), parse_value(trim(assignment.substr(eq + 1))));
}

void PipelineConfig::validate() const {
  if (segments.min_len_ms > segments.max_len_ms) {
    throw ConfigError("segments.min_len_ms exceeds segments.max_len_ms");
  }
  if (!(track.cost.c_detect > track.cost.c_track)) throw ConfigError("cost.detect must exceed cost.track");
  if (synth.weak_speakers > synth.speakers) throw ConfigError("synth.weak_speakers exceeds synth.speakers");
  if (synth.own_images > provider.images) throw ConfigError("synth.own_images exceeds provider.images");
  try {
    track.validate();
    segments.validate();
    dcf.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

json PipelineConfig::to_json() const {
  json j = json::object();
  for (const auto& [key, f] : fields()) j[key] = f.get(*this);
  for (const auto& [lang, q] : provider.queries) {
    j["query." + lang + ".face"] = q.face;
    j["query." + lang + ".photo"] = q.photo;
    j["query." + lang + ".interview"] = q.interview;
  }
  return j;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [key, _] : fields()) keys.push_back(key);
  keys.insert(keys.end(), {"query.en.face", "query.en.interview", "query.en.photo"});
  return keys;
}

void apply_config_text(PipelineConfig& cfg, const std::string& text, const std::string& origin) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    auto j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw ConfigError(origin + ": malformed JSON");
    std::vector<std::pair<std::string, json>> flat;
    flatten(j, "", flat);
    for (const auto& [k, v] : flat) cfg.set(k, v);
    return;
  }
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    try {
      cfg.apply_override(line);
    } catch (const ConfigError& e) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::filesystem::filesystem_error("cannot open config", path, std::make_error_code(std::errc::no_such_file_or_directory));
  std::stringstream buf;
  buf << is.rdbuf();
  PipelineConfig cfg;
  apply_config_text(cfg, buf.str(), path.string());
  cfg.validate();
  return cfg;
}

}  // namespace avcurate
