#include <doctest.h>

#include <cmath>

#include "diar/rng.hpp"
#include "diar/scoring.hpp"
#include "oracles.hpp"

using namespace diar;

namespace {

Annotation make(const std::string& rec,
                std::initializer_list<std::pair<std::pair<double, double>, const char*>> segs) {
  Annotation a{rec, {}};
  for (const auto& [span, spk] : segs)
    a.segments.push_back({TimeSpan(span.first, span.second), spk});
  normalize_segments(a.segments);
  return a;
}

// Random annotation pair for oracle comparison: a reference and a perturbed
// hypothesis over the same recording.
std::pair<Annotation, Annotation> random_pair(Rng& rng) {
  const int speakers = rng.uniform_int(1, 5);
  Annotation ref{"r", {}};
  const int segments = rng.uniform_int(1, 10);
  for (int i = 0; i < segments; ++i) {
    const double start = rng.uniform(0.0, 50.0);
    const double dur = rng.uniform(0.5, 10.0);
    ref.segments.push_back(
        {TimeSpan(start, start + dur), "ref" + std::to_string(rng.uniform_int(0, speakers - 1))});
  }
  normalize_segments(ref.segments);

  Annotation hyp{"r", {}};
  for (const auto& segment : ref.segments) {
    if (rng.uniform() < 0.15) continue;  // dropped segment
    double start = segment.span.start_s + rng.uniform(-1.0, 1.0);
    double end = segment.span.end_s + rng.uniform(-1.0, 1.0);
    start = std::max(0.0, start);
    if (end - start < 0.1) end = start + 0.1;
    // Rename with occasional confusion.
    std::string spk = "hyp" + segment.speaker_id.substr(3);
    if (rng.uniform() < 0.2) spk = "hyp" + std::to_string(rng.uniform_int(0, speakers - 1));
    hyp.segments.push_back({TimeSpan(start, end), spk});
  }
  if (rng.uniform() < 0.3 || hyp.segments.empty()) {
    const double start = rng.uniform(0.0, 55.0);
    hyp.segments.push_back({TimeSpan(start, start + rng.uniform(0.3, 4.0)), "hypX"});
  }
  normalize_segments(hyp.segments);
  return {ref, hyp};
}

}  // namespace

TEST_CASE("optimal_mapping picks the dominant pairing") {
  const auto ref = make("r", {{{0.0, 10.0}, "A"}});
  const auto hyp = make("r", {{{0.0, 10.0}, "X"}});
  const auto mapping = optimal_mapping(ref, hyp, 0.01);
  REQUIRE(mapping.pairs.size() == 1);
  CHECK(mapping.pairs[0].first == "A");
  CHECK(mapping.pairs[0].second == "X");

  const auto ref2 = make("r", {{{0.0, 10.0}, "A"}, {{10.0, 20.0}, "B"}});
  const auto hyp2 = make("r", {{{10.0, 20.0}, "X"}, {{0.0, 10.0}, "Y"}});
  const auto mapping2 = optimal_mapping(ref2, hyp2, 0.01);
  REQUIRE(mapping2.pairs.size() == 2);
  CHECK(mapping2.pairs[0] == std::pair<std::string, std::string>("A", "Y"));
  CHECK(mapping2.pairs[1] == std::pair<std::string, std::string>("B", "X"));

  CHECK_THROWS_AS(optimal_mapping(make("a", {{{0.0, 1.0}, "A"}}),
                                  make("b", {{{0.0, 1.0}, "A"}}), 0.01),
                  std::invalid_argument);
}

TEST_CASE("hungarian equals exhaustive permutation search") {
  Rng rng(101);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = rng.uniform_int(1, 6);
    Matrix score(n, n);
    for (double& v : score.data) v = rng.uniform(0.0, 100.0);
    const auto assignment = hungarian_max(score);
    double got = 0.0;
    for (int i = 0; i < n; ++i) got += score.at(i, assignment[i]);
    CHECK(got == doctest::Approx(oracle::best_assignment_score(score)).epsilon(1e-9));
  }
}

TEST_CASE("hungarian handles rectangular score matrices") {
  Matrix score(2, 3);
  score.at(0, 0) = 5.0;
  score.at(0, 2) = 7.0;
  score.at(1, 2) = 9.0;
  const auto assignment = hungarian_max(score);
  // Best total = 5 (A->0) + 9 (B->2) = 14.
  CHECK(assignment[0] == 0);
  CHECK(assignment[1] == 2);
}

TEST_CASE("der identity and the worked split example") {
  const auto ref = make("r", {{{0.0, 10.0}, "A"}});
  CHECK(der(ref, ref, 0.25, 0.01).der_pct == doctest::Approx(0.0));

  const auto hyp = make("r", {{{0.0, 8.0}, "X"}, {{8.0, 10.0}, "Y"}});
  const auto breakdown = der(ref, hyp, 0.0, 0.01);
  CHECK(breakdown.missed_speech_pct == doctest::Approx(0.0));
  CHECK(breakdown.false_alarm_pct == doctest::Approx(0.0));
  CHECK(breakdown.speaker_error_pct == doctest::Approx(20.0));
  CHECK(breakdown.der_pct == doctest::Approx(20.0));
}

TEST_CASE("der with overlapping reference") {
  const auto ref = make("r", {{{0.0, 10.0}, "A"}, {{4.0, 6.0}, "B"}});
  const auto hyp = make("r", {{{0.0, 10.0}, "X"}});
  const auto breakdown = der(ref, hyp, 0.0, 0.01);
  CHECK(breakdown.missed_speech_pct == doctest::Approx(100.0 * 2.0 / 12.0));
  CHECK(breakdown.false_alarm_pct == doctest::Approx(0.0));
  CHECK(breakdown.speaker_error_pct == doctest::Approx(0.0));
  CHECK(breakdown.der_pct == doctest::Approx(100.0 * 2.0 / 12.0));
}

TEST_CASE("der components always sum to der") {
  Rng rng(103);
  for (int trial = 0; trial < 30; ++trial) {
    const auto [ref, hyp] = random_pair(rng);
    const double collar = rng.uniform() < 0.5 ? 0.0 : 0.25;
    const auto breakdown = der(ref, hyp, collar, 0.01);
    CHECK(breakdown.der_pct ==
          doctest::Approx(breakdown.missed_speech_pct + breakdown.false_alarm_pct +
                          breakdown.speaker_error_pct)
              .epsilon(1e-9));
    CHECK(breakdown.missed_speech_pct >= 0.0);
    CHECK(breakdown.false_alarm_pct >= 0.0);
    CHECK(breakdown.speaker_error_pct >= 0.0);
  }
}

TEST_CASE("der invariant under hypothesis speaker renaming") {
  Rng rng(107);
  for (int trial = 0; trial < 10; ++trial) {
    const auto [ref, hyp] = random_pair(rng);
    Annotation renamed = hyp;
    for (auto& segment : renamed.segments) segment.speaker_id = "zz_" + segment.speaker_id;
    normalize_segments(renamed.segments);
    const auto a = der(ref, hyp, 0.25, 0.01);
    const auto b = der(ref, renamed, 0.25, 0.01);
    CHECK(a.der_pct == doctest::Approx(b.der_pct).epsilon(1e-12));
  }
}

TEST_CASE("der errors") {
  const auto ref = make("r", {{{0.0, 1.0}, "A"}});
  CHECK_THROWS_AS(der(Annotation{"r", {}}, ref, 0.0, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(der(ref, ref, -0.1, 0.01), std::invalid_argument);
  CHECK_THROWS_AS(der(ref, ref, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("jer basics") {
  const auto ref = make("r", {{{0.0, 10.0}, "A"}});
  CHECK(jer(ref, ref, 0.01) == doctest::Approx(0.0));

  const auto hyp = make("r", {{{0.0, 5.0}, "X"}});
  CHECK(jer(ref, hyp, 0.01) == doctest::Approx(50.0));

  const auto ref2 = make("r", {{{0.0, 10.0}, "A"}, {{20.0, 30.0}, "B"}});
  const auto hyp2 = make("r", {{{0.0, 10.0}, "X"}});
  CHECK(jer(ref2, hyp2, 0.01) == doctest::Approx(50.0));
}

TEST_CASE("scorer agrees with the 1 ms oracle") {
  Rng rng(211);
  for (int trial = 0; trial < 60; ++trial) {
    const auto [ref, hyp] = random_pair(rng);
    const double collar = trial % 2 == 0 ? 0.0 : 0.25;
    const auto breakdown = der(ref, hyp, collar, 0.001);
    const auto expected = oracle::score_1ms(ref, hyp, collar);
    CHECK(std::abs(breakdown.der_pct - expected.der_pct) <= 0.05);
    CHECK(std::abs(breakdown.missed_speech_pct - expected.missed_pct) <= 0.05);
    CHECK(std::abs(breakdown.false_alarm_pct - expected.falarm_pct) <= 0.05);
    CHECK(std::abs(breakdown.speaker_error_pct - expected.spkerr_pct) <= 0.05);
    CHECK(std::abs(jer(ref, hyp, 0.001) - expected.jer_pct) <= 0.05);
  }
}

TEST_CASE("der quantization stability from 10 ms to 1 ms") {
  // Quantization error is a few ms per boundary, so the bound needs toys with
  // substantial reference time relative to their boundary count.
  Rng rng(223);
  for (int trial = 0; trial < 15; ++trial) {
    Annotation ref{"r", {}};
    double t = rng.uniform(0.0, 2.0);
    for (int i = 0; i < 10; ++i) {
      const double dur = rng.uniform(4.0, 8.0);
      ref.segments.push_back(
          {TimeSpan(t, t + dur), "ref" + std::to_string(rng.uniform_int(0, 2))});
      t += dur + rng.uniform(0.0, 1.0);
    }
    normalize_segments(ref.segments);
    Annotation hyp{"r", {}};
    for (const auto& segment : ref.segments) {
      const double start = std::max(0.0, segment.span.start_s + rng.uniform(-0.4, 0.4));
      hyp.segments.push_back({TimeSpan(start, segment.span.end_s + rng.uniform(-0.4, 0.4)),
                              "hyp" + segment.speaker_id.substr(3)});
    }
    normalize_segments(hyp.segments);
    const auto coarse = der(ref, hyp, 0.25, 0.01);
    const auto fine = der(ref, hyp, 0.25, 0.001);
    CHECK(std::abs(coarse.der_pct - fine.der_pct) < 0.1);
  }
}

TEST_CASE("vad_rates") {
  const auto ref = make("r", {{{0.0, 10.0}, "A"}});
  const auto same = vad_rates(ref, ref, 0.0, 0.01);
  CHECK(same.ms_pct == doctest::Approx(0.0));
  CHECK(same.fa_pct == doctest::Approx(0.0));

  const auto hyp = make("r", {{{0.0, 8.0}, "X"}});
  const auto rates = vad_rates(ref, hyp, 0.0, 0.01, 20.0);
  CHECK(rates.ms_pct == doctest::Approx(10.0));
  CHECK(rates.fa_pct == doctest::Approx(0.0));

  CHECK_THROWS_AS(vad_rates(Annotation{"r", {}}, Annotation{"r", {}}, 0.0, 0.01),
                  std::invalid_argument);
}

TEST_CASE("vad_rates agree with a 1 ms brute count") {
  Rng rng(227);
  for (int trial = 0; trial < 20; ++trial) {
    const auto [ref, hyp] = random_pair(rng);
    const auto rates = vad_rates(ref, hyp, 0.0, 0.001);
    // Direct recount at 1 ms.
    double duration = 0.0;
    for (const auto& s : ref.segments) duration = std::max(duration, s.span.end_s);
    for (const auto& s : hyp.segments) duration = std::max(duration, s.span.end_s);
    const long frames = static_cast<long>(std::ceil(duration / 0.001 - 1e-9));
    long missed = 0, falarm = 0;
    for (long f = 0; f < frames; ++f) {
      const double mid = (f + 0.5) * 0.001;
      bool r = false, h = false;
      for (const auto& s : ref.segments) r = r || (s.span.start_s <= mid && mid < s.span.end_s);
      for (const auto& s : hyp.segments) h = h || (s.span.start_s <= mid && mid < s.span.end_s);
      missed += (r && !h) ? 1 : 0;
      falarm += (h && !r) ? 1 : 0;
    }
    CHECK(std::abs(rates.ms_pct - 100.0 * missed / static_cast<double>(frames)) <= 0.05);
    CHECK(std::abs(rates.fa_pct - 100.0 * falarm / static_cast<double>(frames)) <= 0.05);
  }
}
