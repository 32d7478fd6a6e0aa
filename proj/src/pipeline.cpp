#include "diar/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "diar/error.hpp"

namespace diar {

namespace {

void check_threshold(double value, const char* name) {
  if (value < -1.0 || value > 1.0)
    throw std::invalid_argument(std::string(name) + " must be in [-1, 1]");
}

}  // namespace

void validate_config(const DiarizationConfig& c) {
  if (!(c.shift_s > 0.0) || c.window_s < c.shift_s)
    throw std::invalid_argument("config: window_s >= shift_s > 0 required");
  if (!(c.prune_keep_fraction > 0.0) || c.prune_keep_fraction > 1.0)
    throw std::invalid_argument("config: prune_keep_fraction must be in (0, 1]");
  if (c.boost_delta < 0.0) throw std::invalid_argument("config: negative boost_delta");
  check_threshold(c.merge_threshold, "config: merge_threshold");
  check_threshold(c.leakage_threshold, "config: leakage_threshold");
  check_threshold(c.leakage_centroid_threshold, "config: leakage_centroid_threshold");
  if (c.min_k < 1 || c.max_k < c.min_k) throw std::invalid_argument("config: bad k range");
  if (c.collar_s < 0.0) throw std::invalid_argument("config: negative collar");
  if (!(c.frame_step_s > 0.0)) throw std::invalid_argument("config: frame_step_s must be positive");
}

std::vector<int> assign_overlap_windows(const std::vector<EmbeddingWindow>& overlap_windows,
                                        const std::vector<std::vector<double>>& centroids) {
  if (centroids.empty()) throw std::invalid_argument("assign_overlap_windows: no centroids");
  std::vector<int> labels;
  labels.reserve(overlap_windows.size());
  for (const EmbeddingWindow& w : overlap_windows) {
    int best = 0;
    double best_sim = cosine_similarity(w.vector, centroids[0]);
    for (std::size_t c = 1; c < centroids.size(); ++c) {
      const double sim = cosine_similarity(w.vector, centroids[c]);
      if (sim > best_sim) {
        best_sim = sim;
        best = static_cast<int>(c);
      }
    }
    labels.push_back(best);
  }
  return labels;
}

MergeResult merge_clusters(const std::vector<EmbeddingWindow>& windows, std::vector<int> labels,
                           std::vector<std::vector<double>> centroids, double threshold) {
  check_threshold(threshold, "merge_clusters: threshold");
  if (windows.size() != labels.size())
    throw std::invalid_argument("merge_clusters: label count mismatch");
  const int k = static_cast<int>(centroids.size());
  std::vector<bool> active(k, true);

  MergeResult result;
  for (;;) {
    int best_a = -1, best_b = -1;
    double best_sim = -2.0;
    for (int a = 0; a < k; ++a) {
      if (!active[a]) continue;
      for (int b = a + 1; b < k; ++b) {
        if (!active[b]) continue;
        const double sim = cosine_similarity(centroids[a], centroids[b]);
        if (sim > best_sim) {
          best_sim = sim;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (best_a < 0 || !(best_sim > threshold)) break;

    result.trace.push_back(MergeRecord{best_a, best_b, best_sim});
    for (int& label : labels)
      if (label == best_b) label = best_a;
    active[best_b] = false;

    // Recompute the merged centroid from its member windows.
    std::vector<double> sum(windows.empty() ? centroids[best_a].size()
                                            : windows.front().vector.size(),
                            0.0);
    int count = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (labels[i] != best_a) continue;
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += windows[i].vector[j];
      ++count;
    }
    if (count > 0) {
      for (double& v : sum) v /= count;
      centroids[best_a] = unit_normalize(std::move(sum));
    }
  }

  // Compact surviving cluster ids to [0, k').
  std::vector<int> remap(k, -1);
  int next = 0;
  for (int c = 0; c < k; ++c)
    if (active[c]) remap[c] = next++;
  for (int& label : labels) label = remap[label];
  result.centroids.reserve(next);
  for (int c = 0; c < k; ++c)
    if (active[c]) result.centroids.push_back(std::move(centroids[c]));
  result.labels = std::move(labels);
  return result;
}

LeakageResult leakage_filter(const std::vector<EmbeddingWindow>& windows,
                             const std::vector<int>& labels,
                             const std::vector<std::vector<double>>& centroids, double t_keep,
                             double t_leak) {
  check_threshold(t_keep, "leakage_filter: t_keep");
  check_threshold(t_leak, "leakage_filter: t_leak");
  if (windows.size() != labels.size())
    throw std::invalid_argument("leakage_filter: label count mismatch");
  if (centroids.empty()) throw std::invalid_argument("leakage_filter: no centroids");

  const int n = static_cast<int>(windows.size());
  LeakageResult result;
  result.labels = labels;

  std::vector<bool> removed_flag(n, false);
  for (int i = 0; i < n; ++i) {
    double best = -1.0;
    for (const auto& c : centroids) best = std::max(best, cosine_similarity(windows[i].vector, c));
    if (best < t_keep) {
      removed_flag[i] = true;
      result.removed.push_back(i);
    }
  }

  if (!result.removed.empty()) {
    std::vector<double> sum(windows.front().vector.size(), 0.0);
    for (int i : result.removed)
      for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += windows[i].vector[j];
    for (double& v : sum) v /= static_cast<double>(result.removed.size());
    const std::vector<double> leakage_centroid = unit_normalize(std::move(sum));

    for (int i = 0; i < n; ++i) {
      if (removed_flag[i]) continue;
      if (cosine_similarity(windows[i].vector, leakage_centroid) > t_leak) {
        removed_flag[i] = true;
        result.removed.push_back(i);
      }
    }
    std::sort(result.removed.begin(), result.removed.end());
  }

  for (int i : result.removed) result.labels[i] = -1;
  return result;
}

ResidualDecision energy_residual_filter(double rms_a, double rms_b, double ratio_threshold) {
  if (rms_a < 0.0 || rms_b < 0.0) throw std::invalid_argument("energy filter: negative RMS");
  if (rms_a == 0.0 && rms_b == 0.0) throw std::invalid_argument("energy filter: both channels silent");
  if (!(ratio_threshold > 0.0) || ratio_threshold >= 1.0)
    throw std::invalid_argument("energy filter: ratio_threshold must be in (0, 1)");
  const double lo = std::min(rms_a, rms_b);
  const double hi = std::max(rms_a, rms_b);
  if (lo / hi < ratio_threshold)
    return rms_a >= rms_b ? ResidualDecision::single_speaker_a : ResidualDecision::single_speaker_b;
  return ResidualDecision::two_speakers;
}

std::vector<EmbeddingSet> apply_energy_filter(std::vector<EmbeddingSet> sets,
                                              const std::vector<double>& window_rms,
                                              double ratio_threshold) {
  if (sets.empty()) throw std::invalid_argument("apply_energy_filter: no sets");
  validate_geometry(sets);
  const std::vector<EmbeddingWindow>& windows = sets.front().windows;
  if (window_rms.size() != windows.size())
    throw FormatError("energy sidecar length does not match window count");

  std::vector<bool> drop(windows.size(), false);
  for (std::size_t i = 0; i + 1 < windows.size(); ++i) {
    if (!(windows[i].overlap_flag && windows[i + 1].overlap_flag)) continue;
    if (!(windows[i].span == windows[i + 1].span)) continue;
    switch (energy_residual_filter(window_rms[i], window_rms[i + 1], ratio_threshold)) {
      case ResidualDecision::single_speaker_a: drop[i + 1] = true; break;
      case ResidualDecision::single_speaker_b: drop[i] = true; break;
      case ResidualDecision::two_speakers: break;
    }
    ++i;  // skip the partner channel
  }

  for (EmbeddingSet& set : sets) {
    std::vector<EmbeddingWindow> kept;
    kept.reserve(set.windows.size());
    for (std::size_t i = 0; i < set.windows.size(); ++i)
      if (!drop[i]) kept.push_back(std::move(set.windows[i]));
    set.windows = std::move(kept);
  }
  return sets;
}

Annotation windows_to_annotation(const std::vector<EmbeddingWindow>& windows,
                                 const std::vector<int>& labels, const std::vector<int>& removed,
                                 const std::string& recording_id, double frame_step_s) {
  if (windows.size() != labels.size())
    throw std::invalid_argument("windows_to_annotation: label count mismatch");
  if (!(frame_step_s > 0.0)) throw std::invalid_argument("windows_to_annotation: bad frame step");

  std::vector<bool> skip(windows.size(), false);
  for (int i : removed) {
    if (i < 0 || static_cast<std::size_t>(i) >= windows.size())
      throw std::invalid_argument("windows_to_annotation: removed index out of range");
    skip[i] = true;
  }

  Annotation annotation{recording_id, {}};
  std::vector<LabeledSegment> segments;

  for (int channel = 0; channel <= 1; ++channel) {
    // Active (index-sorted, hence start-sorted) windows of this track.
    std::vector<int> track;
    for (std::size_t i = 0; i < windows.size(); ++i)
      if (!skip[i] && labels[i] >= 0 && windows[i].channel_index == channel)
        track.push_back(static_cast<int>(i));
    if (track.empty()) continue;

    double t0 = windows[track.front()].span.start_s;
    double t1 = windows[track.front()].span.end_s;
    for (int i : track) {
      t0 = std::min(t0, windows[i].span.start_s);
      t1 = std::max(t1, windows[i].span.end_s);
    }
    const long f_begin = static_cast<long>(std::floor(t0 / frame_step_s + 1e-9));
    const long f_end = static_cast<long>(std::ceil(t1 / frame_step_s - 1e-9));

    long run_start = 0;
    int run_label = -1;
    std::size_t head = 0;  // first window whose end might still cover the frame
    std::vector<int> covering;
    auto flush = [&](long f) {
      if (run_label >= 0 && f > run_start) {
        segments.push_back(
            LabeledSegment{TimeSpan(run_start * frame_step_s, f * frame_step_s),
                           "spk" + std::to_string(run_label)});
      }
    };

    for (long f = f_begin; f < f_end; ++f) {
      const double mid = (static_cast<double>(f) + 0.5) * frame_step_s;
      while (head < track.size() && windows[track[head]].span.start_s <= mid) ++head;
      covering.clear();
      for (std::size_t j = 0; j < head; ++j) {
        const EmbeddingWindow& w = windows[track[j]];
        if (w.span.start_s <= mid && mid < w.span.end_s) covering.push_back(track[j]);
      }

      int frame_label = -1;
      if (!covering.empty()) {
        // Majority vote; ties go to the latest-starting covering window.
        int best_count = 0;
        for (std::size_t a = 0; a < covering.size(); ++a) {
          int count = 0;
          for (int j : covering)
            if (labels[j] == labels[covering[a]]) ++count;
          best_count = std::max(best_count, count);
        }
        const EmbeddingWindow* decider = nullptr;
        for (int j : covering) {
          int count = 0;
          for (int j2 : covering)
            if (labels[j2] == labels[j]) ++count;
          if (count != best_count) continue;
          if (decider == nullptr || windows[j].span.start_s > decider->span.start_s ||
              (windows[j].span.start_s == decider->span.start_s &&
               windows[j].span.end_s > decider->span.end_s)) {
            decider = &windows[j];
            frame_label = labels[j];
          }
        }
      }

      if (frame_label != run_label) {
        flush(f);
        run_start = f;
        run_label = frame_label;
      }
    }
    flush(f_end);
  }

  annotation.segments = merge_adjacent(std::move(segments), 0.0);
  return annotation;
}

DiarizationResult diarize(const std::vector<EmbeddingSet>& sets, const DiarizationConfig& config) {
  validate_config(config);
  if (sets.empty()) throw std::invalid_argument("diarize: no embedding sets");
  validate_geometry(sets);

  const EmbeddingSet& base = sets.front();
  const std::size_t n = base.windows.size();
  if (n == 0) throw std::invalid_argument("diarize: empty speech");

  std::vector<int> nonoverlap_idx, overlap_idx;
  for (std::size_t i = 0; i < n; ++i)
    (base.windows[i].overlap_flag ? overlap_idx : nonoverlap_idx).push_back(static_cast<int>(i));
  if (nonoverlap_idx.empty())
    throw std::invalid_argument("diarize: no non-overlapped windows to cluster");

  auto subset = [](const EmbeddingSet& set, const std::vector<int>& idx) {
    std::vector<EmbeddingWindow> out;
    out.reserve(idx.size());
    for (int i : idx) out.push_back(set.windows[i]);
    return out;
  };

  // Per-model affinity over non-overlapped windows, manipulated and fused.
  std::vector<AffinityMatrix> raw;
  raw.reserve(sets.size());
  for (const EmbeddingSet& set : sets) raw.push_back(build_affinity(subset(set, nonoverlap_idx)));

  AffinityMatrix W;
  if (config.fuse_before_manipulation) {
    W = manipulate(fuse(raw), config.affinity_variant, config.prune_keep_fraction,
                   config.boost_delta);
  } else {
    std::vector<AffinityMatrix> manipulated;
    manipulated.reserve(raw.size());
    for (const AffinityMatrix& A : raw)
      manipulated.push_back(
          manipulate(A, config.affinity_variant, config.prune_keep_fraction, config.boost_delta));
    W = fuse(manipulated);
  }
  raw.clear();

  const std::vector<EmbeddingWindow> base_nonoverlap = subset(base, nonoverlap_idx);
  const std::vector<EmbeddingWindow> base_overlap = subset(base, overlap_idx);

  const ClusterResult clusters =
      cluster(W, base_nonoverlap, config.min_k, config.max_k, config.seed);

  std::vector<int> all_labels(n, -1);
  std::vector<std::vector<double>> centroids;
  std::vector<MergeRecord> trace;

  if (config.assign_overlap_before_merge && !overlap_idx.empty()) {
    const std::vector<int> overlap_labels = assign_overlap_windows(base_overlap, clusters.centroids);
    for (std::size_t p = 0; p < nonoverlap_idx.size(); ++p)
      all_labels[nonoverlap_idx[p]] = clusters.labels[p];
    for (std::size_t p = 0; p < overlap_idx.size(); ++p)
      all_labels[overlap_idx[p]] = overlap_labels[p];
    MergeResult merged = merge_clusters(
        base.windows, all_labels, compute_centroids(base.windows, all_labels, clusters.k),
        config.merge_threshold);
    all_labels = std::move(merged.labels);
    centroids = std::move(merged.centroids);
    trace = std::move(merged.trace);
  } else {
    MergeResult merged = merge_clusters(base_nonoverlap, clusters.labels, clusters.centroids,
                                        config.merge_threshold);
    for (std::size_t p = 0; p < nonoverlap_idx.size(); ++p)
      all_labels[nonoverlap_idx[p]] = merged.labels[p];
    if (!overlap_idx.empty()) {
      const std::vector<int> overlap_labels = assign_overlap_windows(base_overlap, merged.centroids);
      for (std::size_t p = 0; p < overlap_idx.size(); ++p)
        all_labels[overlap_idx[p]] = overlap_labels[p];
    }
    centroids = std::move(merged.centroids);
    trace = std::move(merged.trace);
  }

  const LeakageResult leakage =
      leakage_filter(base.windows, all_labels, centroids, config.leakage_threshold,
                     config.leakage_centroid_threshold);

  DiarizationResult result;
  result.annotation = windows_to_annotation(base.windows, leakage.labels, leakage.removed,
                                            base.recording_id, config.frame_step_s);
  std::set<std::string> speakers;
  for (const LabeledSegment& segment : result.annotation.segments) speakers.insert(segment.speaker_id);
  result.num_speakers = static_cast<int>(speakers.size());
  result.removed_windows = leakage.removed;
  result.merge_trace = std::move(trace);
  return result;
}

}  // namespace diar
