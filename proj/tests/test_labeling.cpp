#include <algorithm>

#include "doctest.h"

#include "promon/labeling.hpp"
#include "test_support.hpp"

using namespace promon;

TEST_CASE("progress label: interpolation, boundaries, completion") {
  const TaskAnnotation a = testkit::four_step_annotation();
  CHECK(compute_progress_label(a, 25.0).value == doctest::Approx(62.5).epsilon(1e-12));
  CHECK(compute_progress_label(a, 0.0).value == 0.0);
  CHECK(compute_progress_label(a, 40.0).value == 100.0);
  CHECK(compute_progress_label(a, 45.0).value == 100.0);
}

TEST_CASE("progress label holds through gaps") {
  TaskAnnotation a;
  a.task = "gap task";
  a.steps = {{"a", 0.0, 10.0}, {"b", 15.0, 25.0}};
  CHECK(compute_progress_label(a, 12.0).value == doctest::Approx(50.0));
  CHECK(compute_progress_label(a, 10.0).value == doctest::Approx(50.0));
  CHECK(compute_progress_label(a, 15.0).value == doctest::Approx(50.0));
  CHECK(compute_progress_label(a, 20.0).value == doctest::Approx(75.0));
}

TEST_CASE("progress label before the first step is zero") {
  TaskAnnotation a;
  a.task = "late start";
  a.steps = {{"a", 5.0, 10.0}};
  CHECK(compute_progress_label(a, 2.0).value == 0.0);
}

TEST_CASE("instant steps complete atomically") {
  TaskAnnotation a;
  a.task = "instant";
  a.steps = {{"a", 0.0, 5.0}, {"b", 5.0, 5.0}, {"c", 5.0, 10.0}};
  CHECK(compute_progress_label(a, 4.999).value < 100.0 / 3.0 + 1e-6);
  // at t=5 both a and b are complete and c begins
  CHECK(compute_progress_label(a, 5.0).value == doctest::Approx(200.0 / 3.0));
}

TEST_CASE("progress label rejects negative t") {
  CHECK_THROWS_AS(compute_progress_label(testkit::four_step_annotation(), -1.0),
                  std::invalid_argument);
}

TEST_CASE("distractor label: cap, pre-cap region, zero cap") {
  const TaskAnnotation a = testkit::four_step_annotation();
  const DistractorSpec d{"distractor", 2, 4};
  CHECK(compute_distractor_label(a, d, 35.0).value == doctest::Approx(50.0));
  CHECK(compute_distractor_label(a, d, 5.0).value == doctest::Approx(12.5));
  const DistractorSpec zero{"unrelated", 0, 4};
  for (double t : {0.0, 10.0, 40.0}) {
    CHECK(compute_distractor_label(a, zero, t).value == 0.0);
  }
}

TEST_CASE("distractor label rejects mismatched step counts") {
  const TaskAnnotation a = testkit::four_step_annotation();
  CHECK_THROWS_AS(compute_distractor_label(a, {"bad", 2, 3}, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(compute_distractor_label(a, {"bad", 5, 4}, 0.0), std::invalid_argument);
}

TEST_CASE("segment_stream: 40 s stream under the 4 s / K=4 / 1 fps preset") {
  const auto manifest = testkit::uniform_manifest(40.0, 1.0);
  const auto snippets = segment_stream(manifest, SegmentationConfig::alfred());
  REQUIRE(snippets.size() == 10);
  for (std::size_t i = 0; i < snippets.size(); ++i) {
    CHECK(snippets[i].index == static_cast<int>(i) + 1);
    CHECK(snippets[i].frames.size() == 4);
  }
  CHECK(snippets.front().t_begin == 0.0);
  CHECK(snippets.back().t_end == doctest::Approx(40.0));
  CHECK_FALSE(snippets.back().short_tail);
  CHECK(snippets.back().frames.back().timestamp == doctest::Approx(40.0));
}

TEST_CASE("segment_stream: 5 s stream pads the short tail") {
  const auto manifest = testkit::uniform_manifest(5.0, 1.0);
  const auto snippets = segment_stream(manifest, SegmentationConfig::alfred());
  REQUIRE(snippets.size() == 2);
  CHECK(snippets[1].t_begin == doctest::Approx(4.0));
  CHECK(snippets[1].t_end == doctest::Approx(5.0));
  CHECK(snippets[1].short_tail);
  CHECK(snippets[1].padded);
  REQUIRE(snippets[1].frames.size() == 4);
  CHECK(snippets[1].frames[0].timestamp == doctest::Approx(4.0));
  CHECK(snippets[1].frames[1].timestamp == doctest::Approx(5.0));
  CHECK(snippets[1].frames[2].timestamp == doctest::Approx(5.0));
  CHECK(snippets[1].frames[3].timestamp == doctest::Approx(5.0));
}

TEST_CASE("segment_stream: 6 s stream under the 2 s / K=4 / 2 fps preset") {
  const auto manifest = testkit::uniform_manifest(6.0, 2.0);
  const auto snippets = segment_stream(manifest, SegmentationConfig::ego4d());
  REQUIRE(snippets.size() == 3);
  for (const auto& s : snippets) CHECK(s.frames.size() == 4);
}

TEST_CASE("segment_stream rejects an empty manifest") {
  CHECK_THROWS_WITH_AS(segment_stream({}, SegmentationConfig::alfred()), "empty stream",
                       std::runtime_error);
}

TEST_CASE("segment_stream rejects out-of-order manifests") {
  std::vector<Frame> manifest = testkit::uniform_manifest(4.0, 1.0);
  std::swap(manifest[1], manifest[2]);
  CHECK_THROWS_AS(segment_stream(manifest, SegmentationConfig::alfred()),
                  std::invalid_argument);
}

TEST_CASE("fps resampling picks the nearest source frame, ties to the earlier one") {
  std::vector<Frame> manifest;
  manifest.push_back({0.0, {ImagePayload::Kind::uri, "first"}, "image/jpeg"});
  manifest.push_back({10.0, {ImagePayload::Kind::uri, "last"}, "image/jpeg"});
  const auto snippets = segment_stream(manifest, {10.0, 4, 1.0});
  REQUIRE(snippets.size() == 1);
  // grid 0..10; target 5 is equidistant and must take the earlier frame
  std::vector<std::string> uris;
  for (const auto& f : snippets[0].frames) uris.push_back(f.payload.value);
  CHECK(uris.front() == "first");
  CHECK(uris.back() == "last");
}

TEST_CASE("label_snippet evaluates at the last frame timestamp") {
  const TaskAnnotation a = testkit::four_step_annotation();
  Snippet s;
  s.index = 1;
  s.t_begin = 21.0;
  s.t_end = 25.0;
  s.frames = testkit::uniform_manifest(25.0, 1.0);
  s.frames.erase(s.frames.begin(), s.frames.end() - 4);
  CHECK(label_snippet(a, s).value == doctest::Approx(62.5));
  s.frames.back().timestamp = 40.0;
  CHECK(label_snippet(a, s).value == 100.0);
  s.frames.back().timestamp = 35.0;
  CHECK(label_snippet(a, s, DistractorSpec{"d", 2, 4}).value == doctest::Approx(50.0));
}

TEST_CASE("label monotonicity over random annotations") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> pick_t(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const TaskAnnotation a = testkit::random_annotation(rng);
    const double horizon = a.total_duration() + 10.0;
    for (int j = 0; j < 20; ++j) {
      double t1 = pick_t(rng) * horizon;
      double t2 = pick_t(rng) * horizon;
      if (t1 > t2) std::swap(t1, t2);
      CHECK(compute_progress_label(a, t1).value <= compute_progress_label(a, t2).value + 1e-12);
    }
  }
}

TEST_CASE("step-boundary labels are exactly 100*k/n") {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 300; ++i) {
    const TaskAnnotation a = testkit::random_annotation(rng);
    const double n = static_cast<double>(a.steps.size());
    for (std::size_t k = 0; k < a.steps.size(); ++k) {
      const double boundary = a.steps[k].t_end;
      // instant steps may share the boundary; count every step done by then
      int done = 0;
      for (const Step& s : a.steps) done += s.t_end <= boundary ? 1 : 0;
      const double expected = 100.0 * (static_cast<double>(done) / n);
      CHECK(compute_progress_label(a, boundary).value ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("distractor dominance and plateau") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> pick_t(0.0, 1.0);
  for (int i = 0; i < 300; ++i) {
    const TaskAnnotation a = testkit::random_annotation(rng, 8, false);
    const int n = static_cast<int>(a.steps.size());
    if (n < 1) continue;
    std::uniform_int_distribution<int> pick_nr(0, n);
    const DistractorSpec d{"d", pick_nr(rng), n};
    const double cap = 100.0 * (static_cast<double>(d.shared_steps) / n);
    const double horizon = a.total_duration() + 5.0;
    for (int j = 0; j < 10; ++j) {
      const double t = pick_t(rng) * horizon;
      const double plain = compute_progress_label(a, t).value;
      const double capped = compute_distractor_label(a, d, t).value;
      CHECK(capped <= plain + 1e-12);
      CHECK(capped <= cap + 1e-12);
      if (plain <= cap) CHECK(capped == doctest::Approx(plain).epsilon(1e-12));
    }
    if (d.shared_steps >= 1) {
      const double t_plateau = a.steps[d.shared_steps - 1].t_end;
      CHECK(compute_distractor_label(a, d, t_plateau).value == cap);
      CHECK(compute_distractor_label(a, d, t_plateau + 3.0).value == cap);
      CHECK(compute_distractor_label(a, d, a.total_duration() + 100.0).value == cap);
    }
  }
}

TEST_CASE("segmentation tiles the stream with K frames per snippet") {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> dur(0.5, 60.0);
  std::uniform_int_distribution<int> pick_cfg(0, 1);
  for (int i = 0; i < 100; ++i) {
    const SegmentationConfig cfg =
        pick_cfg(rng) == 0 ? SegmentationConfig::alfred() : SegmentationConfig::ego4d();
    const double total = dur(rng);
    const auto manifest = testkit::uniform_manifest(total, cfg.fps * 2.0);
    const double stream_end = manifest.back().timestamp;
    const auto snippets = segment_stream(manifest, cfg);
    REQUIRE(!snippets.empty());
    CHECK(snippets.front().t_begin == 0.0);
    CHECK(snippets.back().t_end == doctest::Approx(stream_end));
    for (std::size_t s = 0; s < snippets.size(); ++s) {
      CHECK(snippets[s].frames.size() == static_cast<std::size_t>(cfg.frames_per_snippet));
      CHECK(snippets[s].index == static_cast<int>(s) + 1);
      if (s > 0) CHECK(snippets[s].t_begin == doctest::Approx(snippets[s - 1].t_end));
      for (const auto& f : snippets[s].frames) {
        CHECK(f.timestamp >= snippets[s].t_begin - 1e-9);
        CHECK(f.timestamp <= snippets[s].t_end + 1e-9);
      }
      for (std::size_t k = 1; k < snippets[s].frames.size(); ++k) {
        CHECK(snippets[s].frames[k].timestamp >= snippets[s].frames[k - 1].timestamp);
      }
    }
  }
}

TEST_CASE("segmentation config validation") {
  CHECK(validate(SegmentationConfig::alfred()).empty());
  CHECK_FALSE(validate(SegmentationConfig{0.0, 4, 1.0}).empty());
  CHECK_FALSE(validate(SegmentationConfig{4.0, 0, 1.0}).empty());
  CHECK_FALSE(validate(SegmentationConfig{4.0, 4, 0.0}).empty());
}
