#include "diar/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <tuple>

#include "diar/error.hpp"

namespace diar {

namespace {

constexpr double kMinSegmentDuration = 0.010 - 1e-9;  // below scoring quantization
constexpr double kTimeEps = 1e-9;

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::istringstream in(line);
  std::string field;
  while (in >> field) fields.push_back(field);
  return fields;
}

bool parse_double(const std::string& text, double& out) {
  try {
    std::size_t pos = 0;
    out = std::stod(text, &pos);
    return pos == text.size() && std::isfinite(out);
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

TimeSpan::TimeSpan(double start, double end) : start_s(start), end_s(end) {
  if (!std::isfinite(start) || !std::isfinite(end))
    throw std::invalid_argument("TimeSpan: non-finite bound");
  if (start < 0.0) throw std::invalid_argument("TimeSpan: negative start");
  if (!(end > start)) throw std::invalid_argument("TimeSpan: end must exceed start");
}

bool segment_less(const LabeledSegment& a, const LabeledSegment& b) {
  return std::tie(a.span.start_s, a.span.end_s, a.speaker_id) <
         std::tie(b.span.start_s, b.span.end_s, b.speaker_id);
}

void normalize_segments(std::vector<LabeledSegment>& segments) {
  std::sort(segments.begin(), segments.end(), segment_less);
  segments.erase(std::unique(segments.begin(), segments.end()), segments.end());
}

std::vector<Annotation> parse_rttm(std::string_view text) {
  std::map<std::string, std::vector<LabeledSegment>> by_recording;
  long line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line(text.substr(pos, nl == std::string_view::npos ? nl : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;

    const std::vector<std::string> fields = split_fields(line);
    if (fields.size() < 9) throw ParseError("RTTM line has fewer than 9 fields", line_no);
    if (fields[0] != "SPEAKER") throw ParseError("RTTM line does not start with SPEAKER", line_no);

    double onset = 0.0, duration = 0.0;
    if (!parse_double(fields[3], onset)) throw ParseError("non-numeric onset", line_no);
    if (!parse_double(fields[4], duration)) throw ParseError("non-numeric duration", line_no);
    if (onset < 0.0) throw ParseError("negative onset", line_no);
    if (duration <= 0.0) throw ParseError("non-positive duration", line_no);
    if (duration < kMinSegmentDuration) throw ParseError("duration below 10 ms", line_no);

    by_recording[fields[1]].push_back(
        LabeledSegment{TimeSpan(onset, onset + duration), fields[7]});
  }

  std::vector<Annotation> annotations;
  annotations.reserve(by_recording.size());
  for (auto& [recording_id, segments] : by_recording) {
    normalize_segments(segments);
    annotations.push_back(Annotation{recording_id, std::move(segments)});
  }
  return annotations;
}

std::string write_rttm(const std::vector<Annotation>& annotations) {
  std::string out;
  char buf[160];
  for (const Annotation& annotation : annotations) {
    std::vector<LabeledSegment> segments = annotation.segments;
    std::sort(segments.begin(), segments.end(), segment_less);
    for (const LabeledSegment& segment : segments) {
      std::snprintf(buf, sizeof(buf), "SPEAKER %s 1 %.3f %.3f <NA> <NA> %s <NA> <NA>\n",
                    annotation.recording_id.c_str(), segment.span.start_s,
                    segment.span.duration(), segment.speaker_id.c_str());
      out += buf;
    }
  }
  return out;
}

std::vector<TimeSpan> slide_windows(TimeSpan span, double width_s, double shift_s) {
  if (!(width_s > 0.0)) throw std::invalid_argument("slide_windows: width must be positive");
  if (!(shift_s > 0.0) || shift_s > width_s + kTimeEps)
    throw std::invalid_argument("slide_windows: shift must be in (0, width]");

  if (span.duration() < width_s - kTimeEps) return {span};

  std::vector<TimeSpan> windows;
  for (int i = 0;; ++i) {
    const double start = span.start_s + i * shift_s;
    if (start + width_s > span.end_s + kTimeEps) break;
    windows.emplace_back(start, start + width_s);
  }
  // Right-align a final window when the last one stops short of the span end.
  if (windows.empty() || windows.back().end_s < span.end_s - kTimeEps)
    windows.emplace_back(span.end_s - width_s, span.end_s);
  return windows;
}

std::vector<TimeSpan> overlap_regions(const Annotation& annotation) {
  // Boundary sweep: between consecutive event times the set of active
  // speakers is constant, so counting distinct speakers per cell is exact.
  std::vector<double> boundaries;
  for (const LabeledSegment& segment : annotation.segments) {
    boundaries.push_back(segment.span.start_s);
    boundaries.push_back(segment.span.end_s);
  }
  std::sort(boundaries.begin(), boundaries.end());
  boundaries.erase(std::unique(boundaries.begin(), boundaries.end()), boundaries.end());

  std::vector<TimeSpan> regions;
  for (std::size_t i = 0; i + 1 < boundaries.size(); ++i) {
    const double lo = boundaries[i], hi = boundaries[i + 1];
    const double mid = 0.5 * (lo + hi);
    std::vector<const std::string*> active;
    for (const LabeledSegment& segment : annotation.segments) {
      if (segment.span.start_s <= mid && mid < segment.span.end_s) {
        bool seen = false;
        for (const std::string* s : active) seen = seen || *s == segment.speaker_id;
        if (!seen) active.push_back(&segment.speaker_id);
      }
    }
    if (active.size() >= 2) {
      if (!regions.empty() && regions.back().end_s >= lo - kTimeEps)
        regions.back().end_s = hi;
      else
        regions.emplace_back(lo, hi);
    }
  }
  return regions;
}

std::vector<LabeledSegment> merge_adjacent(std::vector<LabeledSegment> segments, double gap_tol_s) {
  if (gap_tol_s < 0.0) throw std::invalid_argument("merge_adjacent: negative gap tolerance");
  std::sort(segments.begin(), segments.end(), segment_less);

  std::vector<LabeledSegment> merged;
  for (LabeledSegment& segment : segments) {
    LabeledSegment* tail = nullptr;
    for (auto it = merged.rbegin(); it != merged.rend(); ++it) {
      if (it->speaker_id == segment.speaker_id) {
        tail = &*it;
        break;
      }
    }
    if (tail != nullptr && segment.span.start_s - tail->span.end_s <= gap_tol_s) {
      tail->span.end_s = std::max(tail->span.end_s, segment.span.end_s);
    } else {
      merged.push_back(std::move(segment));
    }
  }
  std::sort(merged.begin(), merged.end(), segment_less);
  return merged;
}

}  // namespace diar
