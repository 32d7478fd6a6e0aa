#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diar/affinity.hpp"
#include "diar/embeddings.hpp"
#include "diar/spectral.hpp"
#include "diar/timeline.hpp"

namespace diar {

// Every tunable of the diarization pipeline. Defaults follow the reference
// operating point: 1.5 s windows at 0.75 s shift, top-30% row pruning, +0.25
// affinity boost, and postprocessing thresholds 0.65 (cluster merge),
// 0.2 (leakage keep), 0.7 (leakage centroid).
struct DiarizationConfig {
  double window_s = 1.5;
  double shift_s = 0.75;
  double prune_keep_fraction = 0.30;
  double boost_delta = 0.25;
  double merge_threshold = 0.65;
  double leakage_threshold = 0.2;
  double leakage_centroid_threshold = 0.7;
  int min_k = 1;
  int max_k = 21;
  double collar_s = 0.25;
  double frame_step_s = 0.01;
  std::uint64_t seed = 0;
  AffinityVariant affinity_variant = AffinityVariant::boosted;
  bool fuse_before_manipulation = false;
  // Alternate stage order: map overlapped windows onto the raw clusters and
  // only then merge, instead of merging first.
  bool assign_overlap_before_merge = false;
};

void validate_config(const DiarizationConfig& config);

struct MergeRecord {
  int cluster_a = 0;
  int cluster_b = 0;
  double similarity = 0.0;
};

struct DiarizationResult {
  Annotation annotation;
  int num_speakers = 0;
  std::vector<int> removed_windows;  // global window indices, ascending
  std::vector<MergeRecord> merge_trace;
};

// Each overlapped window goes to the centroid with the highest cosine
// similarity; ties to the lower cluster index.
std::vector<int> assign_overlap_windows(const std::vector<EmbeddingWindow>& overlap_windows,
                                        const std::vector<std::vector<double>>& centroids);

struct MergeResult {
  std::vector<std::vector<double>> centroids;
  std::vector<int> labels;
  std::vector<MergeRecord> trace;
};

// Greedy agglomerative merge: repeatedly join the centroid pair with the
// highest cosine while it exceeds the threshold, recomputing the merged
// centroid from its member windows. Labels are compacted to [0, k').
MergeResult merge_clusters(const std::vector<EmbeddingWindow>& windows, std::vector<int> labels,
                           std::vector<std::vector<double>> centroids, double threshold);

struct LeakageResult {
  std::vector<int> labels;   // -1 for removed windows
  std::vector<int> removed;  // ascending indices
};

// Two-stage leakage filter. Stage 1 removes windows whose best centroid
// cosine is below t_keep. Stage 2 builds a leakage centroid from the removed
// vectors and additionally removes windows closer to it than t_leak.
LeakageResult leakage_filter(const std::vector<EmbeddingWindow>& windows,
                             const std::vector<int>& labels,
                             const std::vector<std::vector<double>>& centroids, double t_keep,
                             double t_leak);

enum class ResidualDecision { two_speakers, single_speaker_a, single_speaker_b };

// Energy-based residual test for separated channel pairs: when the quieter
// channel falls below ratio_threshold times the louder one it is residual
// noise, and the segment is a single speaker on the louder channel.
ResidualDecision energy_residual_filter(double rms_a, double rms_b, double ratio_threshold);

// Drops residual separated channels from every set, using per-window RMS
// energies aligned with the first set's window order.
std::vector<EmbeddingSet> apply_energy_filter(std::vector<EmbeddingSet> sets,
                                              const std::vector<double>& window_rms,
                                              double ratio_threshold);

// Converts labeled windows to an annotation: frame-quantized majority vote
// per separation channel track (ties go to the latest-starting covering
// window), runs merged with zero gap tolerance. Removed windows are skipped.
Annotation windows_to_annotation(const std::vector<EmbeddingWindow>& windows,
                                 const std::vector<int>& labels, const std::vector<int>& removed,
                                 const std::string& recording_id, double frame_step_s = 0.01);

// End-to-end diarization of one recording from one or more aligned embedding
// sets. Clustering uses only non-overlapped windows; overlapped windows are
// mapped onto the merged centroids; leakage filtering runs over everything.
// Deterministic given the config seed.
DiarizationResult diarize(const std::vector<EmbeddingSet>& sets, const DiarizationConfig& config);

}  // namespace diar
