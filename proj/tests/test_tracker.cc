#include <random>

#include "avcurate/shots.h"
#include "avcurate/synth.h"
#include "avcurate/tracker.h"
#include "doctest.h"

using namespace avcurate;

namespace {

const std::vector<float> kPatch{0.25f, 0.25f, 0.25f, 0.25f};
const std::vector<float> kOtherPatch{0.97f, 0.01f, 0.01f, 0.01f};

std::vector<float> vec(std::initializer_list<float> v) { return v; }

TemplateFace poi_template() { return {SpeakerId("poi"), {"poi", vec({1, 0, 0})}, 12}; }

FaceObservation poi_face(BBox b = {100, 80, 64, 64}) { return {b, vec({1, 0.05f, 0}), kPatch}; }
FaceObservation stranger(BBox b = {300, 80, 64, 64}) { return {b, vec({0, 1, 0}), kPatch}; }

FrameFeature frame(std::uint32_t i, std::vector<FaceObservation> faces) {
  FrameFeature f;
  f.index = i;
  f.t_ms = i * 40;
  f.hist = kPatch;
  f.detections = std::move(faces);
  return f;
}

std::vector<Shot> one_shot(std::uint32_t n) { return {{0, n - 1, 0, (n - 1) * 40}}; }

void check_cost_identity(const CostReport& c, const CostModel& m) {
  CHECK(c.total == doctest::Approx(m.c_detect * static_cast<double>(c.detections) +
                                   m.c_track * static_cast<double>(c.track_steps) +
                                   m.c_verify * static_cast<double>(c.verifications)));
  CHECK(c.detections + c.track_steps >= c.frames);
}

}  // namespace

TEST_SUITE("tracker") {
  TEST_CASE("config validation") {
    TrackerConfig c;
    c.cost.c_detect = 1.0;
    CHECK_THROWS(c.validate());
    c = {};
    c.verify_threshold = 2.0;
    CHECK_THROWS(c.validate());
    c = {};
    c.frame_ms = 0;
    CHECK_THROWS(c.validate());
    CHECK_THROWS(Tracker(VideoId("v"), TemplateFace{SpeakerId("p"), {"p", {0, 0}}, 1}, TrackerConfig{}));
  }

  TEST_CASE("POI on screen for a whole shot: one detection, then tracking") {
    std::vector<FrameFeature> f;
    for (std::uint32_t i = 0; i < 100; ++i) f.push_back(frame(i, {poi_face(), stranger()}));
    const TrackerConfig cfg;
    const auto r = run_tracker(f, one_shot(100), poi_template(), cfg, VideoId("v"));
    REQUIRE(r.segments.size() == 1);
    const auto& s = r.segments[0];
    CHECK(s.start_frame == 0);
    CHECK(s.end_frame == 99);
    CHECK(s.start_ms == 0);
    CHECK(s.end_ms == 4000);
    CHECK(s.end_reason == TrackEnd::kStreamEnd);
    CHECK(r.cost.detections == 1);
    CHECK(r.cost.track_steps == 99);
    CHECK(r.cost.verifications == 3);
    CHECK(r.cost.total == doctest::Approx(8 + 99 + 3));
    check_cost_identity(r.cost, cfg.cost);
  }

  TEST_CASE("nobody on screen: detector every frame, no segments") {
    std::vector<FrameFeature> f;
    for (std::uint32_t i = 0; i < 50; ++i) f.push_back(frame(i, {stranger()}));
    const auto r = run_tracker(f, one_shot(50), poi_template(), {}, VideoId("v"));
    CHECK(r.segments.empty());
    CHECK(r.cost.detections == 50);
    CHECK(r.cost.total == doctest::Approx(400));
  }

  TEST_CASE("frames without a recorded detector pass are empty scenes") {
    std::vector<FrameFeature> f;
    for (std::uint32_t i = 0; i < 10; ++i) {
      auto x = frame(i, {});
      x.detections.reset();
      f.push_back(x);
    }
    CHECK(run_tracker(f, one_shot(10), poi_template(), {}, VideoId("v")).segments.empty());
  }

  TEST_CASE("a shot boundary ends the track and re-detects on the same frame") {
    std::vector<FrameFeature> f;
    for (std::uint32_t i = 0; i < 60; ++i) f.push_back(frame(i, {poi_face()}));
    const std::vector<Shot> shots{{0, 29, 0, 1160}, {30, 59, 1200, 2360}};
    const auto r = run_tracker(f, shots, poi_template(), {}, VideoId("v"));
    REQUIRE(r.segments.size() == 2);
    CHECK(r.segments[0].end_frame == 29);
    CHECK(r.segments[0].end_reason == TrackEnd::kShotBoundary);
    CHECK(r.segments[1].start_frame == 30);
    CHECK(r.cost.detections == 2);
  }

  TEST_CASE("leaving the screen ends the track as lost") {
    std::vector<FrameFeature> f;
    for (std::uint32_t i = 0; i < 40; ++i) f.push_back(frame(i, i < 20 ? std::vector{poi_face()} : std::vector{stranger()}));
    const auto r = run_tracker(f, one_shot(40), poi_template(), {}, VideoId("v"));
    REQUIRE(r.segments.size() == 1);
    CHECK(r.segments[0].end_frame == 19);
    CHECK(r.segments[0].end_reason == TrackEnd::kLost);
    CHECK(r.cost.detections == 1 + 20);
  }

  TEST_CASE("patch drift ends the track") {
    std::vector<FrameFeature> f;
    for (std::uint32_t i = 0; i < 30; ++i) {
      auto face = poi_face();
      if (i >= 10) face.patch_hist = kOtherPatch;
      f.push_back(frame(i, {face}));
    }
    const auto r = run_tracker(f, one_shot(30), poi_template(), {}, VideoId("v"));
    REQUIRE(r.segments.size() == 2);
    CHECK(r.segments[0].end_frame == 9);
    CHECK(r.segments[0].end_reason == TrackEnd::kDrift);
    CHECK(r.segments[1].start_frame == 10);  // re-acquired with the new patch
  }

  TEST_CASE("an identity swap is caught at the next re-verification") {
    std::vector<FrameFeature> f;
    for (std::uint32_t i = 0; i < 80; ++i) {
      auto face = i < 10 ? poi_face() : stranger(BBox{100, 80, 64, 64});
      f.push_back(frame(i, {face}));
    }
    TrackerConfig cfg;
    const auto r = run_tracker(f, one_shot(80), poi_template(), cfg, VideoId("v"));
    REQUIRE(r.segments.size() == 1);
    CHECK(r.segments[0].end_reason == TrackEnd::kVerifyFailed);
    CHECK(r.segments[0].end_frame == 24);  // check on the 25th tracked frame
    cfg.verify_interval = 0;
    const auto never = run_tracker(f, one_shot(80), poi_template(), cfg, VideoId("v"));
    CHECK(never.segments[0].end_frame == 79);
  }

  TEST_CASE("the highest-overlap box is followed") {
    std::vector<FrameFeature> f;
    f.push_back(frame(0, {poi_face({100, 80, 64, 64})}));
    f.push_back(frame(1, {stranger({140, 80, 64, 64}), poi_face({104, 80, 64, 64})}));
    const auto r = run_tracker(f, one_shot(2), poi_template(), {}, VideoId("v"));
    REQUIRE(r.segments.size() == 1);
    CHECK(r.segments[0].end_frame == 1);
  }

  TEST_CASE("segments never straddle a shot boundary and stay ordered") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 10; ++trial) {
      InterviewParams p;
      p.n_frames = 1500;
      p.switch_rate = 0.3;
      const auto poi = random_unit(16, rng());
      std::vector<std::vector<double>> others{lookalike(poi, random_unit(16, rng()), 0.75), random_unit(16, rng())};
      SyntheticStream stream(make_interview_script(p, poi, others, rng()));
      const auto shots = detect_shots(stream);
      TemplateFace t{SpeakerId("p"), {"p", {}}, 10};
      for (double x : poi) t.vector.values.push_back(static_cast<float>(x));
      const auto rep = compare_policies(stream, shots, t, {}, VideoId("v"));
      check_cost_identity(rep.tracked, CostModel{});
      std::uint32_t prev_end = 0;
      bool first = true;
      for (const auto& s : rep.segments) {
        CHECK(s.start_frame <= s.end_frame);
        if (!first) CHECK(s.start_frame > prev_end);
        for (const auto& shot : shots) {
          if (s.start_frame >= shot.start_frame && s.start_frame <= shot.end_frame) CHECK(s.end_frame <= shot.end_frame);
        }
        prev_end = s.end_frame;
        first = false;
      }
      CHECK(rep.frame_agreement >= 0.0);
      CHECK(rep.frame_agreement <= 1.0);
      CHECK(rep.baseline.total == doctest::Approx(8.0 * 1500));
    }
  }

  TEST_CASE("interview stream: tracker is several times cheaper than per-frame detection") {
    InterviewParams p;
    p.n_frames = 6000;
    p.presence = 0.95;
    const auto poi = random_unit(32, 1);
    SyntheticStream stream(make_interview_script(p, poi, {random_unit(32, 2), random_unit(32, 3)}, 4));
    const auto shots = detect_shots(stream);
    TemplateFace t{SpeakerId("p"), {"p", {}}, 10};
    for (double x : poi) t.vector.values.push_back(static_cast<float>(x));
    const auto rep = compare_policies(stream, shots, t, {}, VideoId("v"));
    CHECK(rep.cost_ratio > 5.0);
    CHECK(rep.frame_agreement > 0.95);
  }
}
