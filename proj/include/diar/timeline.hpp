#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace diar {

// Half-open-ish time interval in seconds; strictly positive duration.
struct TimeSpan {
  double start_s = 0.0;
  double end_s = 0.0;

  TimeSpan() = default;
  TimeSpan(double start, double end);

  double duration() const { return end_s - start_s; }
  bool operator==(const TimeSpan&) const = default;
};

struct LabeledSegment {
  TimeSpan span;
  std::string speaker_id;

  bool operator==(const LabeledSegment&) const = default;
};

// All segments of one recording, sorted by (start, end, speaker). Segments of
// different speakers may overlap; that is how overlapped speech is represented.
struct Annotation {
  std::string recording_id;
  std::vector<LabeledSegment> segments;

  bool operator==(const Annotation&) const = default;
};

// Ordering used throughout for segment lists.
bool segment_less(const LabeledSegment& a, const LabeledSegment& b);

// Sorts segments in place and drops exact (span, speaker) duplicates.
void normalize_segments(std::vector<LabeledSegment>& segments);

// Parses RTTM text into one Annotation per recording id (sorted by id).
// Throws ParseError for malformed lines; segments shorter than 10 ms are
// rejected as being below scoring quantization.
std::vector<Annotation> parse_rttm(std::string_view text);

// Serializes annotations as RTTM with millisecond (3-decimal) resolution:
//   SPEAKER <rec> 1 <onset> <dur> <NA> <NA> <speaker> <NA> <NA>
std::string write_rttm(const std::vector<Annotation>& annotations);

// Fixed-width windows at a fixed shift over a span. The final partial window
// is right-aligned to the span end so every window has full width; a span
// shorter than the width yields the span itself as the single window.
std::vector<TimeSpan> slide_windows(TimeSpan span, double width_s, double shift_s);

// Maximal disjoint spans during which at least two distinct speakers are
// active, sorted and merged.
std::vector<TimeSpan> overlap_regions(const Annotation& annotation);

// Coalesces same-speaker segments whose gap is <= gap_tol_s (overlapping
// segments count as gap <= 0). Output is sorted.
std::vector<LabeledSegment> merge_adjacent(std::vector<LabeledSegment> segments, double gap_tol_s);

}  // namespace diar
