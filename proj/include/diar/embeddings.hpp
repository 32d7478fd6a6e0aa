#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diar/timeline.hpp"

namespace diar {

// One embedding window. Windows produced by overlap separation carry
// overlap_flag = true and a channel index (0 or 1); plain windows are always
// channel 0.
struct EmbeddingWindow {
  TimeSpan span;
  std::vector<double> vector;
  bool overlap_flag = false;
  int channel_index = 0;
};

// All windows of one recording for one embedding model, sorted by
// (span.start, channel_index). At most two windows share a span (the two
// separated channels) and then both are overlap-flagged. Vectors are unit
// L2 norm after ingestion.
struct EmbeddingSet {
  std::string recording_id;
  std::string model_id;
  int dim = 0;
  std::vector<EmbeddingWindow> windows;
};

// Configuration of the synthetic conversation generator. Speakers are fixed
// random directions on the unit sphere; every window vector is the speaker
// direction plus isotropic Gaussian noise, renormalized. noise_sigma is the
// expected L2 norm of the perturbation (per-component std is sigma/sqrt(dim)),
// so a given sigma separates speakers equally well at any dimension.
struct SynthConfig {
  int num_speakers = 2;
  double total_duration_s = 60.0;
  double overlap_fraction = 0.0;   // fraction of turn boundaries made overlapping
  double noise_sigma = 0.0;        // perturbation norm, used when model_sigmas is empty
  int dim = 192;
  std::uint64_t seed = 0;
  double turn_min_s = 3.0;
  double turn_max_s = 8.0;
  double window_s = 1.5;
  double shift_s = 0.75;
  std::string recording_id = "synth";
  std::vector<std::string> model_ids = {"model0"};
  std::vector<double> model_sigmas;  // per-model override; empty = noise_sigma everywhere
};

struct SynthResult {
  Annotation truth;
  std::vector<EmbeddingSet> sets;
};

// Scales a vector to unit L2 norm (within 1e-12). Zero or non-finite input
// is an argument error.
std::vector<double> unit_normalize(std::vector<double> v);

// Enforces all EmbeddingSet invariants; throws FormatError naming the first
// offending record.
void validate_set(const EmbeddingSet& set);

// Archive I/O. Format: one UTF-8 JSON header line, then count*dim
// little-endian float32 values in window order. See README for the schema.
EmbeddingSet load_archive(const std::string& path);
void save_archive(const EmbeddingSet& set, const std::string& path);

// Fusion precondition: all sets must carry the identical
// (span, overlap_flag, channel_index) sequence. Dims may differ.
void validate_geometry(const std::vector<EmbeddingSet>& sets);

// Deterministic synthetic conversation + embeddings; the ground truth for
// end-to-end tests. Same config (including seed) gives bit-identical output.
SynthResult synth_conversation(const SynthConfig& config);

}  // namespace diar
