#include <map>
#include <set>
#include <sstream>

#include "avcurate/synth.h"
#include "avcurate/verification.h"
#include "doctest.h"
#include "oracles.h"

using namespace avcurate;

namespace {

std::vector<ScoredTrial> trials(std::initializer_list<double> targets, std::initializer_list<double> nontargets) {
  std::vector<ScoredTrial> out;
  for (double s : targets) out.push_back({s, TrialLabel::kTarget});
  for (double s : nontargets) out.push_back({s, TrialLabel::kNontarget});
  return out;
}

LabeledEmbeddingSet toy_set(const std::vector<int>& per_speaker) {
  LabeledEmbeddingSet s;
  for (std::size_t spk = 0; spk < per_speaker.size(); ++spk) {
    for (int k = 0; k < per_speaker[spk]; ++k) {
      s.add("s" + std::to_string(spk) + "/v/" + std::to_string(k), "s" + std::to_string(spk),
            Vector::Constant(2, static_cast<double>(spk)));
    }
  }
  return s;
}

}  // namespace

TEST_SUITE("verification") {
  TEST_CASE("EER of separated, reversed and interleaved scores") {
    CHECK(compute_eer(trials({2, 3}, {0, 1})) == doctest::Approx(0.0));
    CHECK(compute_eer(trials({0, 1}, {2, 3})) == doctest::Approx(100.0));
    CHECK(compute_eer(trials({1, 3}, {0, 2})) == doctest::Approx(50.0));
    CHECK(compute_eer(trials({0.5, 3, 4}, {1, 2})) == doctest::Approx(100.0 / 3.0));
    CHECK(compute_eer(trials({1, 1}, {1, 1})) == doctest::Approx(50.0));  // all tied: chance
  }

  TEST_CASE("accept rule is score >= threshold") {
    // All tied: threshold at the tie accepts everything, FAR 1 FRR 0.
    const auto t = trials({1}, {1});
    CHECK(compute_min_dcf(t, {0.5, 1, 1}) == doctest::Approx(1.0));
  }

  TEST_CASE("minDCF worked example") {
    const auto t = trials({0.5, 3, 4}, {1, 2});
    CHECK(compute_min_dcf(t, {0.5, 1, 1}) == doctest::Approx(1.0 / 3.0));
    // p = 0.01: rejecting everything costs 0.01, normalized to 1.
    CHECK(compute_min_dcf(t, {0.01, 1, 1}) <= 1.0 + 1e-12);
  }

  TEST_CASE("metrics reject one-sided or non-finite trials") {
    CHECK_THROWS(compute_eer(trials({1, 2}, {})));
    CHECK_THROWS(compute_eer(trials({}, {1})));
    CHECK_THROWS(compute_eer(trials({NAN}, {1})));
    CHECK_THROWS(compute_min_dcf(trials({1}, {0}), {0.0, 1, 1}));
    CHECK_THROWS(compute_min_dcf(trials({1}, {0}), {0.5, -1, 1}));
  }

  TEST_CASE("metrics match the counting oracle") {
    std::mt19937_64 rng(31);
    for (int k = 0; k < 500; ++k) {
      const auto t = oracle::random_trials(rng, 60);
      REQUIRE(compute_eer(t) == doctest::Approx(oracle::eer(t)).epsilon(1e-12));
      REQUIRE(compute_min_dcf(t, {0.01, 1, 1}) == doctest::Approx(oracle::min_dcf(t, 0.01, 1, 1)).epsilon(1e-12));
      REQUIRE(compute_min_dcf(t, {0.3, 2, 1}) == doctest::Approx(oracle::min_dcf(t, 0.3, 2, 1)).epsilon(1e-12));
    }
  }

  TEST_CASE("metrics depend only on the score order") {
    std::mt19937_64 rng(32);
    for (int k = 0; k < 100; ++k) {
      auto t = oracle::random_trials(rng, 40);
      const double eer = compute_eer(t);
      const double dcf = compute_min_dcf(t);
      for (auto& x : t) x.score = 3.0 * x.score + 7.0;
      std::shuffle(t.begin(), t.end(), rng);
      CHECK(compute_eer(t) == doctest::Approx(eer));
      CHECK(compute_min_dcf(t) == doctest::Approx(dcf));
      CHECK(eer >= 0.0);
      CHECK(eer <= 100.0);
    }
  }

  TEST_CASE("trial list: targets are all same-speaker pairs, non-targets match them one for one") {
    const auto set = toy_set({3, 4, 1, 2});
    const auto list = build_trials(set, 5);
    std::size_t n_t = 0, n_n = 0;
    std::set<std::pair<std::size_t, std::size_t>> seen;
    std::map<std::size_t, int> balance;
    for (const auto& t : list.trials) {
      CHECK(seen.insert({t.a, t.b}).second);
      const bool same = set.labels[t.a] == set.labels[t.b];
      if (t.label == TrialLabel::kTarget) {
        CHECK(same);
        CHECK(t.a < t.b);
        ++n_t;
        ++balance[t.a];
      } else {
        CHECK_FALSE(same);
        ++n_n;
        --balance[t.a];
      }
    }
    CHECK(n_t == 3 + 6 + 0 + 1);
    CHECK(n_n == n_t);
    for (const auto& [_, b] : balance) CHECK(b == 0);
    CHECK(list.speakers_without_targets == 1);

    const auto again = build_trials(set, 5);
    CHECK(again.trials.size() == list.trials.size());
    for (std::size_t k = 0; k < list.trials.size(); ++k) CHECK(again.trials[k].b == list.trials[k].b);
    CHECK_THROWS(build_trials(toy_set({5}), 1));
  }

  TEST_CASE("non-target pool shortfall is reported") {
    const auto list = build_trials(toy_set({6, 1}), 2);
    CHECK(list.utterances_short_of_nontargets > 0);
  }

  TEST_CASE("speaker split is disjoint and sized by the fraction") {
    const auto set = toy_set(std::vector<int>(10, 2));
    const auto s = split_speakers(set, 3);
    CHECK(s.train.size() == 8);
    CHECK(s.test.size() == 2);
    for (const auto& x : s.test) CHECK(std::find(s.train.begin(), s.train.end(), x) == s.train.end());
    CHECK(select_speakers(set, s.test).size() == 4);
    CHECK(split_speakers(set, 3).train == s.train);
    CHECK_THROWS(split_speakers(toy_set(std::vector<int>(5, 2)), 3, 0.8));
    CHECK_THROWS(split_speakers(set, 3, 1.0));
  }

  TEST_CASE("trial file format") {
    const auto set = toy_set({2, 1});
    std::ostringstream os;
    write_trials(os, set, std::vector<Trial>{{0, 1, TrialLabel::kTarget}, {0, 2, TrialLabel::kNontarget}});
    CHECK(os.str() == "s0/v/0 s0/v/1 target\ns0/v/0 s1/v/0 nontarget\n");
  }

  TEST_CASE("clean synthetic corpus verifies well") {
    WorldParams p;
    p.n_speakers = 40;
    p.dim = 16;
    p.within_scale = 0.1;
    const auto corpus = gen_embeddings(make_world(p), 6, 2).set;
    const auto e = evaluate_corpus(corpus, BackendConfig{15, true, {}}, 7);
    CHECK(e.report.eer < 5.0);
    CHECK(e.report.n_target == e.report.n_nontarget);
    CHECK(e.split.test.size() == 8);
    const auto j = to_json(e.report);
    CHECK(j.at("eer_percent") == e.report.eer);
  }
}
