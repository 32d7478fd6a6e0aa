#include <doctest.h>

#include <cmath>
#include <limits>

#include "diar/error.hpp"
#include "diar/rng.hpp"
#include "diar/timeline.hpp"
#include "oracles.hpp"

using namespace diar;

TEST_CASE("TimeSpan rejects invalid bounds") {
  CHECK_THROWS_AS(TimeSpan(1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeSpan(2.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeSpan(-0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(TimeSpan(0.0, std::numeric_limits<double>::infinity()),
                  std::invalid_argument);
  CHECK(TimeSpan(0.0, 0.5).duration() == doctest::Approx(0.5));
}

TEST_CASE("parse_rttm maps fields") {
  const auto annotations = parse_rttm("SPEAKER rec1 1 0.50 2.00 <NA> <NA> spkA <NA> <NA>\n");
  REQUIRE(annotations.size() == 1);
  CHECK(annotations[0].recording_id == "rec1");
  REQUIRE(annotations[0].segments.size() == 1);
  CHECK(annotations[0].segments[0].speaker_id == "spkA");
  CHECK(annotations[0].segments[0].span.start_s == doctest::Approx(0.5));
  CHECK(annotations[0].segments[0].span.end_s == doctest::Approx(2.5));
}

TEST_CASE("parse_rttm empty input") { CHECK(parse_rttm("").empty()); }

TEST_CASE("parse_rttm keeps overlapping speakers") {
  const auto annotations = parse_rttm(
      "SPEAKER rec 1 0.0 5.0 <NA> <NA> A <NA> <NA>\n"
      "SPEAKER rec 1 4.0 5.0 <NA> <NA> B <NA> <NA>\n");
  REQUIRE(annotations.size() == 1);
  CHECK(annotations[0].segments.size() == 2);
}

TEST_CASE("parse_rttm errors carry line numbers") {
  CHECK_THROWS_AS(parse_rttm("SPEAKER rec 1 0.0\n"), ParseError);
  CHECK_THROWS_AS(parse_rttm("TURN rec 1 0.0 1.0 <NA> <NA> A <NA> <NA>\n"), ParseError);
  CHECK_THROWS_AS(parse_rttm("SPEAKER rec 1 x 1.0 <NA> <NA> A <NA> <NA>\n"), ParseError);
  CHECK_THROWS_AS(parse_rttm("SPEAKER rec 1 0.0 0.0 <NA> <NA> A <NA> <NA>\n"), ParseError);
  CHECK_THROWS_AS(parse_rttm("SPEAKER rec 1 0.0 0.005 <NA> <NA> A <NA> <NA>\n"), ParseError);
  try {
    parse_rttm("SPEAKER rec 1 0.0 1.0 <NA> <NA> A <NA> <NA>\nbad line here x x x x x x\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
  }
}

TEST_CASE("write_rttm exact line format") {
  const Annotation annotation{"rec1", {{TimeSpan(0.5, 2.5), "spkA"}}};
  CHECK(write_rttm({annotation}) == "SPEAKER rec1 1 0.500 2.000 <NA> <NA> spkA <NA> <NA>\n");
}

TEST_CASE("write_rttm orders overlapping segments by start") {
  const Annotation annotation{"r",
                              {{TimeSpan(2.0, 4.0), "B"}, {TimeSpan(1.0, 3.0), "A"}}};
  const std::string text = write_rttm({annotation});
  CHECK(text.find("1.000") < text.find("2.000"));
}

TEST_CASE("rttm round-trip is idempotent at 1 ms") {
  Rng rng(11);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<Annotation> annotations;
    const int recordings = rng.uniform_int(1, 3);
    for (int r = 0; r < recordings; ++r) {
      Annotation a{"rec" + std::to_string(r), {}};
      const int count = rng.uniform_int(1, 12);
      for (int s = 0; s < count; ++s) {
        // Millisecond-aligned so the 3-decimal serialization is lossless and
        // segment pairing with the original stays stable.
        const double start = rng.uniform_int(0, 50000) * 0.001;
        const double dur = rng.uniform_int(20, 9000) * 0.001;
        a.segments.push_back({TimeSpan(start, start + dur),
                              "spk" + std::to_string(rng.uniform_int(0, 4))});
      }
      normalize_segments(a.segments);
      annotations.push_back(std::move(a));
    }
    const auto parsed = parse_rttm(write_rttm(annotations));
    const auto reparsed = parse_rttm(write_rttm(parsed));
    REQUIRE(parsed.size() == reparsed.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      REQUIRE(parsed[i].segments.size() == reparsed[i].segments.size());
      for (std::size_t j = 0; j < parsed[i].segments.size(); ++j) {
        CHECK(parsed[i].segments[j].speaker_id == reparsed[i].segments[j].speaker_id);
        CHECK(std::abs(parsed[i].segments[j].span.start_s - reparsed[i].segments[j].span.start_s) <=
              1e-9);
        CHECK(std::abs(parsed[i].segments[j].span.end_s - reparsed[i].segments[j].span.end_s) <=
              1e-9);
      }
    }
    // And the first parse is within 1 ms of the original.
    REQUIRE(parsed.size() == annotations.size());
    for (std::size_t i = 0; i < parsed.size(); ++i) {
      REQUIRE(parsed[i].segments.size() == annotations[i].segments.size());
    }
    for (std::size_t i = 0; i < parsed.size(); ++i)
      for (std::size_t j = 0; j < parsed[i].segments.size(); ++j) {
        CHECK(std::abs(parsed[i].segments[j].span.start_s -
                       annotations[i].segments[j].span.start_s) <= 1e-3 + 1e-9);
        CHECK(std::abs(parsed[i].segments[j].span.end_s -
                       annotations[i].segments[j].span.end_s) <= 2e-3 + 1e-9);
      }
  }
}

TEST_CASE("slide_windows reference geometry") {
  const auto windows = slide_windows(TimeSpan(10.0, 13.0), 1.5, 0.75);
  REQUIRE(windows.size() == 3);
  CHECK(windows[0] == TimeSpan(10.0, 11.5));
  CHECK(windows[1] == TimeSpan(10.75, 12.25));
  CHECK(windows[2] == TimeSpan(11.5, 13.0));
}

TEST_CASE("slide_windows short segment") {
  const auto windows = slide_windows(TimeSpan(0.0, 1.0), 1.5, 0.75);
  REQUIRE(windows.size() == 1);
  CHECK(windows[0] == TimeSpan(0.0, 1.0));
}

TEST_CASE("slide_windows exact fit") {
  const auto windows = slide_windows(TimeSpan(0.0, 1.5), 1.5, 0.75);
  REQUIRE(windows.size() == 1);
  CHECK(windows[0] == TimeSpan(0.0, 1.5));
}

TEST_CASE("slide_windows right-aligns the final window") {
  const auto windows = slide_windows(TimeSpan(0.0, 3.4), 1.5, 0.75);
  REQUIRE(windows.size() >= 2);
  CHECK(windows.back() == TimeSpan(3.4 - 1.5, 3.4));
  for (std::size_t i = 0; i + 1 < windows.size() - 1; ++i)
    CHECK(windows[i + 1].start_s - windows[i].start_s == doctest::Approx(0.75));
}

TEST_CASE("slide_windows argument errors") {
  CHECK_THROWS_AS(slide_windows(TimeSpan(0.0, 5.0), 0.0, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(slide_windows(TimeSpan(0.0, 5.0), 1.5, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(slide_windows(TimeSpan(0.0, 5.0), 1.5, 2.0), std::invalid_argument);
}

TEST_CASE("slide_windows properties: width, coverage, shifts") {
  Rng rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const double start = rng.uniform(0.0, 20.0);
    const double dur = rng.uniform(1.6, 30.0);
    const TimeSpan span(start, start + dur);
    const auto windows = slide_windows(span, 1.5, 0.75);
    REQUIRE(!windows.empty());
    CHECK(windows.front().start_s == doctest::Approx(span.start_s));
    CHECK(windows.back().end_s == doctest::Approx(span.end_s));
    for (std::size_t i = 0; i < windows.size(); ++i) {
      CHECK(windows[i].duration() == doctest::Approx(1.5));
      if (i + 2 < windows.size())
        CHECK(windows[i + 1].start_s - windows[i].start_s == doctest::Approx(0.75));
      if (i + 1 < windows.size()) CHECK(windows[i + 1].start_s < windows[i].end_s + 1e-9);
    }
  }
}

TEST_CASE("overlap_regions basic cases") {
  const Annotation a{"r", {{TimeSpan(0.0, 10.0), "A"}, {TimeSpan(4.0, 6.0), "B"}}};
  const auto regions = overlap_regions(a);
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].start_s == doctest::Approx(4.0));
  CHECK(regions[0].end_s == doctest::Approx(6.0));

  const Annotation touching{"r", {{TimeSpan(0.0, 5.0), "A"}, {TimeSpan(5.0, 10.0), "B"}}};
  CHECK(overlap_regions(touching).empty());
}

TEST_CASE("overlap_regions merges chained overlaps") {
  Annotation a{"r",
               {{TimeSpan(0.0, 10.0), "A"}, {TimeSpan(2.0, 4.0), "B"}, {TimeSpan(3.0, 8.0), "C"}}};
  normalize_segments(a.segments);
  const auto regions = overlap_regions(a);
  const auto expected = oracle::overlap_regions_1ms(a);
  REQUIRE(regions.size() == expected.size());
  REQUIRE(regions.size() == 1);
  CHECK(regions[0].start_s == doctest::Approx(2.0));
  CHECK(regions[0].end_s == doctest::Approx(8.0));
}

TEST_CASE("overlap_regions of single-speaker annotations is empty") {
  Rng rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    Annotation a{"r", {}};
    const int count = rng.uniform_int(1, 8);
    for (int i = 0; i < count; ++i) {
      const double start = rng.uniform(0.0, 30.0);
      a.segments.push_back({TimeSpan(start, start + rng.uniform(0.1, 5.0)), "solo"});
    }
    normalize_segments(a.segments);
    CHECK(overlap_regions(a).empty());
  }
}

TEST_CASE("overlap_regions matches 1 ms oracle on random annotations") {
  Rng rng(41);
  for (int trial = 0; trial < 30; ++trial) {
    Annotation a{"r", {}};
    const int count = rng.uniform_int(2, 10);
    for (int i = 0; i < count; ++i) {
      // Millisecond-aligned boundaries so oracle quantization is exact.
      const double start = rng.uniform_int(0, 20000) * 0.001;
      const double dur = rng.uniform_int(100, 8000) * 0.001;
      a.segments.push_back(
          {TimeSpan(start, start + dur), "spk" + std::to_string(rng.uniform_int(0, 3))});
    }
    normalize_segments(a.segments);
    const auto got = overlap_regions(a);
    const auto expected = oracle::overlap_regions_1ms(a);
    REQUIRE(got.size() == expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(std::abs(got[i].start_s - expected[i].start_s) <= 0.0011);
      CHECK(std::abs(got[i].end_s - expected[i].end_s) <= 0.0011);
    }
  }
}

TEST_CASE("merge_adjacent basics") {
  const std::vector<LabeledSegment> touching{{TimeSpan(0.0, 1.0), "A"}, {TimeSpan(1.0, 2.0), "A"}};
  const auto merged = merge_adjacent(touching, 0.0);
  REQUIRE(merged.size() == 1);
  CHECK(merged[0].span == TimeSpan(0.0, 2.0));

  const std::vector<LabeledSegment> gapped{{TimeSpan(0.0, 1.0), "A"}, {TimeSpan(1.2, 2.0), "A"}};
  CHECK(merge_adjacent(gapped, 0.1).size() == 2);

  const std::vector<LabeledSegment> different{{TimeSpan(0.0, 1.0), "A"}, {TimeSpan(1.0, 2.0), "B"}};
  CHECK(merge_adjacent(different, 0.0).size() == 2);
}

TEST_CASE("merge_adjacent is idempotent") {
  Rng rng(51);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<LabeledSegment> segments;
    const int count = rng.uniform_int(1, 15);
    for (int i = 0; i < count; ++i) {
      const double start = rng.uniform(0.0, 20.0);
      segments.push_back({TimeSpan(start, start + rng.uniform(0.05, 3.0)),
                          "spk" + std::to_string(rng.uniform_int(0, 2))});
    }
    const double tol = rng.uniform(0.0, 0.5);
    const auto once = merge_adjacent(segments, tol);
    CHECK(merge_adjacent(once, tol) == once);
  }
}
