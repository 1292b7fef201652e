#include <set>

#include "avcurate/diarize.h"
#include "avcurate/synth.h"
#include "doctest.h"

using namespace avcurate;

namespace {

struct Fixture {
  SpeakerWorld world;
  GeneratedEmbeddings corpus;
  Backend backend;

  explicit Fixture(double rate, std::uint64_t seed = 1) {
    WorldParams p;
    p.n_speakers = 20;
    p.n_distractors = 20;
    p.dim = 16;
    p.within_scale = 0.1;
    p.seed = seed;
    world = make_world(p);
    const auto own = gen_embeddings(world, 20, seed + 1);
    const auto pool = gen_distractor_pool(world, 20, seed + 2);
    corpus = inject_contamination(own, pool, make_contamination_plan(own.set, pool, rate, seed + 3));
    backend = fit_backend(gen_embeddings(world, 10, seed + 4, "train").set, BackendConfig{15, true, {}}).backend;
  }

  // Preprocessed vectors and ids of one speaker.
  std::pair<std::vector<std::string>, std::vector<Vector>> speaker(const std::string& s) const {
    std::pair<std::vector<std::string>, std::vector<Vector>> out;
    for (std::size_t i = 0; i < corpus.set.size(); ++i) {
      if (corpus.set.labels[i] != s) continue;
      out.first.push_back(corpus.set.ids[i]);
      out.second.push_back(backend.preprocess(corpus.set.vectors[i]));
    }
    return out;
  }
};

}  // namespace

TEST_SUITE("diarize") {
  TEST_CASE("PLDA distances are non-negative with a zero at the best pair") {
    const Fixture f(0.2);
    const auto [ids, xs] = f.speaker("spk000");
    const auto d = plda_distance_matrix(f.backend.plda, xs);
    REQUIRE(d);
    d->validate();
    double min_off = 1e300;
    for (std::size_t i = 0; i < d->size(); ++i)
      for (std::size_t j = i + 1; j < d->size(); ++j) min_off = std::min(min_off, (*d)(i, j));
    CHECK(min_off == 0.0);
    CHECK_FALSE(plda_distance_matrix(f.backend.plda, std::span<const Vector>(xs.data(), 1)));
  }

  TEST_CASE("all-noise speakers keep every utterance and are flagged") {
    const Fixture f(0.0);
    const auto [ids, xs] = f.speaker("spk001");
    const auto r = clean_speaker(f.backend.plda, "spk001", ids, xs, 0.0, 3);
    CHECK(r.degenerate);
    CHECK(r.kept.size() == ids.size());
    CHECK(r.dropped.empty());
    CHECK(r.vsr == 1.0);
  }

  TEST_CASE("speakers with fewer utterances than min_pts pass through") {
    const Fixture f(0.0);
    const auto [ids, xs] = f.speaker("spk002");
    const auto r = clean_speaker(f.backend.plda, "spk002", std::span(ids).first(2), std::span(xs).first(2), 5.0, 3);
    CHECK(r.passthrough);
    CHECK(r.kept.size() == 2);
  }

  TEST_CASE("eps at the largest distance keeps everything") {
    const Fixture f(0.2);
    const auto [ids, xs] = f.speaker("spk003");
    const auto d = plda_distance_matrix(f.backend.plda, xs);
    const auto r = clean_speaker(f.backend.plda, "spk003", ids, xs, d->max_value(), 3);
    CHECK(r.vsr == 1.0);
    CHECK_FALSE(r.degenerate);
  }

  TEST_CASE("kept and dropped partition the input") {
    const Fixture f(0.2);
    const auto [ids, xs] = f.speaker("spk004");
    for (double eps : {1.0, 5.0, 20.0}) {
      const auto r = clean_speaker(f.backend.plda, "spk004", ids, xs, eps, 3);
      std::set<std::string> all(r.kept.begin(), r.kept.end());
      all.insert(r.dropped.begin(), r.dropped.end());
      CHECK(all.size() == ids.size());
      CHECK(r.kept.size() + r.dropped.size() == ids.size());
      CHECK(r.vsr == doctest::Approx(static_cast<double>(r.kept.size()) / static_cast<double>(ids.size())));
    }
  }

  TEST_CASE("cleaning removes foreign utterances and raises purity") {
    const Fixture f(0.2);
    const double before = purity(f.corpus.set.labels, f.corpus.truth);
    const auto cleaned = clean_corpus(f.backend, f.corpus.set, 5.0, 3, 4);
    std::vector<std::string> truth;
    for (const auto& id : cleaned.kept.ids) {
      const auto it = std::find(f.corpus.set.ids.begin(), f.corpus.set.ids.end(), id);
      truth.push_back(f.corpus.truth[static_cast<std::size_t>(it - f.corpus.set.ids.begin())]);
    }
    CHECK(purity(cleaned.kept.labels, truth) > before);
    CHECK(cleaned.mean_vsr > 0.6);
    CHECK(cleaned.reports.size() == 20);
  }

  TEST_CASE("parallel cleaning matches serial") {
    const Fixture f(0.2);
    const auto a = clean_corpus(f.backend, f.corpus.set, 5.0, 3, 1);
    const auto b = clean_corpus(f.backend, f.corpus.set, 5.0, 3, 8);
    CHECK(a.kept.ids == b.kept.ids);
    CHECK(a.mean_vsr == b.mean_vsr);
  }

  TEST_CASE("sweep VSR grows with eps and reaches one") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
      const Fixture f(0.2, seed);
      const std::vector<double> grid{0.5, 1, 2, 3, 5, 8, 12, 20, 40, 1e6};
      const auto rows = eps_sweep(f.backend, f.corpus.set, grid, 3);
      REQUIRE(rows.size() == grid.size());
      for (std::size_t k = 1; k < rows.size(); ++k) {
        // Speakers that were all noise at the smaller eps report VSR 1, so
        // compare only once no speaker is degenerate.
        if (rows[k - 1].degenerate_speakers == 0) CHECK(rows[k].mean_vsr >= rows[k - 1].mean_vsr);
      }
      CHECK(rows.back().mean_vsr == 1.0);
      CHECK(rows.back().kept == rows.back().total);
    }
    const Fixture f(0.2);
    CHECK_THROWS(eps_sweep(f.backend, f.corpus.set, std::vector<double>{}, 3));
  }

  TEST_CASE("sweep table lists every row") {
    std::vector<SweepRow> rows(2);
    rows[0].eps = 70;
    rows[0].mean_vsr = 0.8;
    rows[1].eps = 80;
    rows[1].mean_vsr = 0.9;
    rows[1].verification = VerificationReport{3.25, 0.4, 10, 10, {}};
    const auto t = format_sweep_table(rows, VerificationReport{5.5, 0.6, 10, 10, {}});
    CHECK(t.find("raw") != std::string::npos);
    CHECK(t.find("3.25") != std::string::npos);
    CHECK(t.find("70.000") != std::string::npos);
    CHECK(to_json(rows[1]).at("verification").at("eer_percent") == 3.25);
  }
}
