#pragma once

#include <string>
#include <utility>
#include <vector>

#include "diar/matrix.hpp"
#include "diar/timeline.hpp"

namespace diar {

// DER components as percentages of total in-scope reference speaker time.
// der_pct is exactly the sum of the three components.
struct DerBreakdown {
  double missed_speech_pct = 0.0;
  double false_alarm_pct = 0.0;
  double speaker_error_pct = 0.0;
  double der_pct = 0.0;
};

// One-to-one reference/hypothesis speaker pairing.
struct SpeakerMapping {
  std::vector<std::pair<std::string, std::string>> pairs;  // (reference, hypothesis)
};

struct VadRates {
  double ms_pct = 0.0;
  double fa_pct = 0.0;
};

// Maximum-weight assignment (row -> column) on a score matrix; unassigned
// rows get -1. Exposed for oracle comparison in tests.
std::vector<int> hungarian_max(const Matrix& score);

// Optimal speaker mapping: maximizes total co-occurring frame time at step_s
// quantization (no collar), Hungarian assignment on the co-occurrence
// matrix. Pairs with zero co-occurrence are dropped.
SpeakerMapping optimal_mapping(const Annotation& ref, const Annotation& hyp, double step_s);

// Frame-based DER with a collar around reference segment boundaries. Frames
// whose midpoint lies strictly within collar_s of any reference boundary are
// excluded from scoring.
DerBreakdown der(const Annotation& ref, const Annotation& hyp, double collar_s, double step_s);

// Jaccard error rate: mean over reference speakers of 1 - |ref ∩ hyp| /
// |ref ∪ hyp| under the optimal mapping; unmapped reference speakers score 1.
// No collar, per convention.
double jer(const Annotation& ref, const Annotation& hyp, double step_s);

// VAD-style missed speech / false alarm, percentages of all in-scope frames
// of the recording. duration_s == 0 means "use the last segment end".
VadRates vad_rates(const Annotation& ref, const Annotation& hyp, double collar_s, double step_s,
                   double duration_s = 0.0);

}  // namespace diar
