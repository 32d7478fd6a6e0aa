#include "diar/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace diar {

namespace {

// Frame-activity table for one annotation: per speaker, a boolean row over
// the common frame grid. A frame is active when its midpoint lies inside a
// segment of that speaker.
struct ActivityTable {
  std::vector<std::string> speakers;
  std::vector<std::vector<unsigned char>> active;  // [speaker][frame]
  long frames = 0;

  int speaker_index(const std::string& id) const {
    for (std::size_t i = 0; i < speakers.size(); ++i)
      if (speakers[i] == id) return static_cast<int>(i);
    return -1;
  }
};

double last_end(const Annotation& a) {
  double end = 0.0;
  for (const LabeledSegment& s : a.segments) end = std::max(end, s.span.end_s);
  return end;
}

ActivityTable build_activity(const Annotation& annotation, long frames, double step_s) {
  ActivityTable table;
  table.frames = frames;
  for (const LabeledSegment& segment : annotation.segments) {
    if (table.speaker_index(segment.speaker_id) < 0) table.speakers.push_back(segment.speaker_id);
  }
  std::sort(table.speakers.begin(), table.speakers.end());
  table.active.assign(table.speakers.size(), std::vector<unsigned char>(frames, 0));
  for (const LabeledSegment& segment : annotation.segments) {
    const int s = table.speaker_index(segment.speaker_id);
    // Frames whose midpoint (f + 0.5) * step lies in [start, end).
    long first = static_cast<long>(std::ceil(segment.span.start_s / step_s - 0.5 - 1e-9));
    long last = static_cast<long>(std::floor(segment.span.end_s / step_s - 0.5 - 1e-9));
    first = std::max(first, 0L);
    last = std::min(last, frames - 1);
    for (long f = first; f <= last; ++f) {
      const double mid = (static_cast<double>(f) + 0.5) * step_s;
      if (mid >= segment.span.start_s && mid < segment.span.end_s) table.active[s][f] = 1;
    }
  }
  return table;
}

// Frames excluded by the collar: midpoint strictly closer than collar_s to
// any reference segment boundary.
std::vector<unsigned char> collar_mask(const Annotation& ref, long frames, double step_s,
                                       double collar_s) {
  std::vector<unsigned char> excluded(frames, 0);
  if (collar_s <= 0.0) return excluded;
  for (const LabeledSegment& segment : ref.segments) {
    for (const double boundary : {segment.span.start_s, segment.span.end_s}) {
      long first = static_cast<long>(std::floor((boundary - collar_s) / step_s - 0.5));
      long last = static_cast<long>(std::ceil((boundary + collar_s) / step_s - 0.5));
      first = std::max(first, 0L);
      last = std::min(last, frames - 1);
      for (long f = first; f <= last; ++f) {
        const double mid = (static_cast<double>(f) + 0.5) * step_s;
        if (std::abs(mid - boundary) < collar_s) excluded[f] = 1;
      }
    }
  }
  return excluded;
}

long frame_count(double duration_s, double step_s) {
  return static_cast<long>(std::ceil(duration_s / step_s - 1e-9));
}

Matrix co_occurrence(const ActivityTable& ref, const ActivityTable& hyp) {
  Matrix co(static_cast<int>(ref.speakers.size()), static_cast<int>(hyp.speakers.size()));
  for (int r = 0; r < co.rows; ++r)
    for (int h = 0; h < co.cols; ++h) {
      long count = 0;
      for (long f = 0; f < ref.frames; ++f)
        if (ref.active[r][f] && hyp.active[h][f]) ++count;
      co.at(r, h) = static_cast<double>(count);
    }
  return co;
}

void check_same_recording(const Annotation& ref, const Annotation& hyp) {
  if (ref.recording_id != hyp.recording_id)
    throw std::invalid_argument("scoring: recording ids differ: " + ref.recording_id + " vs " +
                                hyp.recording_id);
}

}  // namespace

std::vector<int> hungarian_max(const Matrix& score) {
  // Solve as min-cost assignment on the negated, square-padded matrix.
  const int n = std::max(score.rows, score.cols);
  if (n == 0) return {};
  Matrix cost(n, n, 0.0);
  for (int i = 0; i < score.rows; ++i)
    for (int j = 0; j < score.cols; ++j) cost.at(i, j) = -score.at(i, j);

  // Potentials-based O(n^3) Hungarian algorithm (1-based working arrays).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost.at(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(score.rows, -1);
  for (int j = 1; j <= n; ++j) {
    const int i = p[j];
    if (i >= 1 && i <= score.rows && j <= score.cols) row_to_col[i - 1] = j - 1;
  }
  return row_to_col;
}

SpeakerMapping optimal_mapping(const Annotation& ref, const Annotation& hyp, double step_s) {
  check_same_recording(ref, hyp);
  if (!(step_s > 0.0)) throw std::invalid_argument("optimal_mapping: bad step");

  const double duration = std::max(last_end(ref), last_end(hyp));
  const long frames = frame_count(duration, step_s);
  const ActivityTable ref_table = build_activity(ref, frames, step_s);
  const ActivityTable hyp_table = build_activity(hyp, frames, step_s);

  SpeakerMapping mapping;
  if (ref_table.speakers.empty() || hyp_table.speakers.empty()) return mapping;

  const Matrix co = co_occurrence(ref_table, hyp_table);
  const std::vector<int> assignment = hungarian_max(co);
  for (int r = 0; r < co.rows; ++r) {
    const int h = assignment[r];
    if (h >= 0 && co.at(r, h) > 0.0)
      mapping.pairs.emplace_back(ref_table.speakers[r], hyp_table.speakers[h]);
  }
  std::sort(mapping.pairs.begin(), mapping.pairs.end());
  return mapping;
}

DerBreakdown der(const Annotation& ref, const Annotation& hyp, double collar_s, double step_s) {
  check_same_recording(ref, hyp);
  if (collar_s < 0.0 || !(step_s > 0.0)) throw std::invalid_argument("der: bad collar or step");
  if (ref.segments.empty()) throw std::invalid_argument("der: empty reference");

  const double duration = std::max(last_end(ref), last_end(hyp));
  const long frames = frame_count(duration, step_s);
  const ActivityTable ref_table = build_activity(ref, frames, step_s);
  const ActivityTable hyp_table = build_activity(hyp, frames, step_s);
  const std::vector<unsigned char> excluded = collar_mask(ref, frames, step_s, collar_s);

  const SpeakerMapping mapping = optimal_mapping(ref, hyp, step_s);
  std::vector<std::pair<int, int>> mapped;
  for (const auto& [r_id, h_id] : mapping.pairs)
    mapped.emplace_back(ref_table.speaker_index(r_id), hyp_table.speaker_index(h_id));

  long missed = 0, falarm = 0, spkerr = 0, ref_time = 0;
  for (long f = 0; f < frames; ++f) {
    if (excluded[f]) continue;
    int r_count = 0, h_count = 0, matched = 0;
    for (const auto& row : ref_table.active) r_count += row[f];
    for (const auto& row : hyp_table.active) h_count += row[f];
    for (const auto& [r, h] : mapped)
      if (ref_table.active[r][f] && hyp_table.active[h][f]) ++matched;
    missed += std::max(0, r_count - h_count);
    falarm += std::max(0, h_count - r_count);
    spkerr += std::min(r_count, h_count) - matched;
    ref_time += r_count;
  }
  if (ref_time == 0) throw std::invalid_argument("der: no reference speech in scoring region");

  DerBreakdown out;
  const double denom = static_cast<double>(ref_time);
  out.missed_speech_pct = 100.0 * static_cast<double>(missed) / denom;
  out.false_alarm_pct = 100.0 * static_cast<double>(falarm) / denom;
  out.speaker_error_pct = 100.0 * static_cast<double>(spkerr) / denom;
  out.der_pct = out.missed_speech_pct + out.false_alarm_pct + out.speaker_error_pct;
  return out;
}

double jer(const Annotation& ref, const Annotation& hyp, double step_s) {
  check_same_recording(ref, hyp);
  if (!(step_s > 0.0)) throw std::invalid_argument("jer: bad step");
  if (ref.segments.empty()) throw std::invalid_argument("jer: empty reference");

  const double duration = std::max(last_end(ref), last_end(hyp));
  const long frames = frame_count(duration, step_s);
  const ActivityTable ref_table = build_activity(ref, frames, step_s);
  const ActivityTable hyp_table = build_activity(hyp, frames, step_s);
  const SpeakerMapping mapping = optimal_mapping(ref, hyp, step_s);

  std::map<std::string, std::string> ref_to_hyp;
  for (const auto& [r, h] : mapping.pairs) ref_to_hyp[r] = h;

  double total = 0.0;
  for (std::size_t r = 0; r < ref_table.speakers.size(); ++r) {
    const auto it = ref_to_hyp.find(ref_table.speakers[r]);
    if (it == ref_to_hyp.end()) {
      total += 1.0;
      continue;
    }
    const int h = hyp_table.speaker_index(it->second);
    long inter = 0, uni = 0;
    for (long f = 0; f < frames; ++f) {
      const bool a = ref_table.active[r][f] != 0;
      const bool b = hyp_table.active[h][f] != 0;
      inter += (a && b) ? 1 : 0;
      uni += (a || b) ? 1 : 0;
    }
    total += uni == 0 ? 0.0 : 1.0 - static_cast<double>(inter) / static_cast<double>(uni);
  }
  return 100.0 * total / static_cast<double>(ref_table.speakers.size());
}

VadRates vad_rates(const Annotation& ref, const Annotation& hyp, double collar_s, double step_s,
                   double duration_s) {
  check_same_recording(ref, hyp);
  if (collar_s < 0.0 || !(step_s > 0.0)) throw std::invalid_argument("vad_rates: bad collar or step");

  const double duration = duration_s > 0.0 ? duration_s : std::max(last_end(ref), last_end(hyp));
  const long frames = frame_count(duration, step_s);
  if (frames <= 0) throw std::invalid_argument("vad_rates: zero-length recording");

  const ActivityTable ref_table = build_activity(ref, frames, step_s);
  const ActivityTable hyp_table = build_activity(hyp, frames, step_s);
  const std::vector<unsigned char> excluded = collar_mask(ref, frames, step_s, collar_s);

  long missed = 0, falarm = 0, in_scope = 0;
  for (long f = 0; f < frames; ++f) {
    if (excluded[f]) continue;
    ++in_scope;
    bool ref_speech = false, hyp_speech = false;
    for (const auto& row : ref_table.active) ref_speech = ref_speech || row[f];
    for (const auto& row : hyp_table.active) hyp_speech = hyp_speech || row[f];
    if (ref_speech && !hyp_speech) ++missed;
    if (hyp_speech && !ref_speech) ++falarm;
  }
  if (in_scope == 0) throw std::invalid_argument("vad_rates: collar excludes all frames");

  VadRates out;
  out.ms_pct = 100.0 * static_cast<double>(missed) / static_cast<double>(in_scope);
  out.fa_pct = 100.0 * static_cast<double>(falarm) / static_cast<double>(in_scope);
  return out;
}

}  // namespace diar
