#include "diar/embeddings.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "diar/error.hpp"
#include "diar/rng.hpp"

namespace diar {

namespace {

using nlohmann::json;

double l2_norm_squared(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

void append_f32_le(std::string& out, float value) {
  const auto bits = std::bit_cast<std::uint32_t>(value);
  out.push_back(static_cast<char>(bits & 0xff));
  out.push_back(static_cast<char>((bits >> 8) & 0xff));
  out.push_back(static_cast<char>((bits >> 16) & 0xff));
  out.push_back(static_cast<char>((bits >> 24) & 0xff));
}

float read_f32_le(const unsigned char* p) {
  const std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

}  // namespace

std::vector<double> unit_normalize(std::vector<double> v) {
  if (v.empty() || !all_finite(v)) throw std::invalid_argument("unit_normalize: non-finite or empty vector");
  const double norm = std::sqrt(l2_norm_squared(v));
  if (!(norm > 0.0)) throw std::invalid_argument("unit_normalize: zero vector");
  for (double& x : v) x /= norm;
  return v;
}

void validate_set(const EmbeddingSet& set) {
  if (set.dim <= 0) throw FormatError("embedding set has non-positive dim");
  for (std::size_t i = 0; i < set.windows.size(); ++i) {
    const EmbeddingWindow& w = set.windows[i];
    const long rec = static_cast<long>(i);
    if (static_cast<int>(w.vector.size()) != set.dim)
      throw FormatError("window vector length does not match dim", rec);
    if (!all_finite(w.vector)) throw FormatError("window vector has non-finite component", rec);
    if (std::abs(std::sqrt(l2_norm_squared(w.vector)) - 1.0) > 1e-6)
      throw FormatError("window vector is not unit norm", rec);
    if (w.channel_index != 0 && w.channel_index != 1)
      throw FormatError("channel_index must be 0 or 1", rec);
    if (!w.overlap_flag && w.channel_index != 0)
      throw FormatError("non-overlapped window must be channel 0", rec);
    if (i > 0) {
      const EmbeddingWindow& prev = set.windows[i - 1];
      if (w.span.start_s < prev.span.start_s ||
          (w.span.start_s == prev.span.start_s && w.channel_index <= prev.channel_index))
        throw FormatError("windows not sorted by (start, channel)", rec);
      if (w.span == prev.span && !(w.overlap_flag && prev.overlap_flag))
        throw FormatError("duplicate span without overlap flags", rec);
      if (i > 1 && w.span == set.windows[i - 2].span)
        throw FormatError("more than two windows share a span", rec);
    }
  }
}

EmbeddingSet load_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open archive: " + path);
  std::string contents((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const std::size_t nl = contents.find('\n');
  if (nl == std::string::npos) throw FormatError("archive has no header line: " + path);

  json header;
  try {
    header = json::parse(contents.substr(0, nl));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad archive header: ") + e.what());
  }

  EmbeddingSet set;
  try {
    set.recording_id = header.at("recording_id").get<std::string>();
    set.model_id = header.at("model_id").get<std::string>();
    set.dim = header.at("dim").get<int>();
    const auto count = header.at("count").get<std::size_t>();
    const auto& windows = header.at("windows");
    if (windows.size() != count) throw FormatError("window record count does not match header count");
    if (set.dim <= 0) throw FormatError("non-positive dim in header");

    const std::size_t payload_bytes = contents.size() - nl - 1;
    if (payload_bytes != count * static_cast<std::size_t>(set.dim) * 4)
      throw FormatError("payload size does not match count*dim float32 values");

    const auto* payload = reinterpret_cast<const unsigned char*>(contents.data() + nl + 1);
    set.windows.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
      const auto& rec = windows.at(i);
      EmbeddingWindow w;
      w.span = TimeSpan(rec.at("start_s").get<double>(), rec.at("end_s").get<double>());
      w.overlap_flag = rec.at("overlap_flag").get<bool>();
      w.channel_index = rec.at("channel_index").get<int>();
      w.vector.resize(set.dim);
      for (int j = 0; j < set.dim; ++j) {
        const float f = read_f32_le(payload + (i * static_cast<std::size_t>(set.dim) + j) * 4);
        if (!std::isfinite(f)) throw FormatError("non-finite embedding value", static_cast<long>(i));
        w.vector[j] = static_cast<double>(f);
      }
      try {
        w.vector = unit_normalize(std::move(w.vector));
      } catch (const std::invalid_argument& e) {
        throw FormatError(std::string("bad embedding vector: ") + e.what(), static_cast<long>(i));
      }
      set.windows.push_back(std::move(w));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad archive header: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("bad archive record: ") + e.what());
  }

  validate_set(set);
  return set;
}

void save_archive(const EmbeddingSet& set, const std::string& path) {
  json header;
  header["recording_id"] = set.recording_id;
  header["model_id"] = set.model_id;
  header["dim"] = set.dim;
  header["count"] = set.windows.size();
  json windows = json::array();
  for (const EmbeddingWindow& w : set.windows) {
    windows.push_back({{"start_s", w.span.start_s},
                       {"end_s", w.span.end_s},
                       {"overlap_flag", w.overlap_flag},
                       {"channel_index", w.channel_index}});
  }
  header["windows"] = std::move(windows);

  std::string out = header.dump();
  out.push_back('\n');
  for (const EmbeddingWindow& w : set.windows)
    for (double x : w.vector) append_f32_le(out, static_cast<float>(x));

  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw std::runtime_error("failed to write archive: " + path);
}

void validate_geometry(const std::vector<EmbeddingSet>& sets) {
  if (sets.empty()) throw std::invalid_argument("validate_geometry: no sets");
  const EmbeddingSet& base = sets.front();
  for (std::size_t s = 1; s < sets.size(); ++s) {
    const EmbeddingSet& other = sets[s];
    const std::size_t n = std::min(base.windows.size(), other.windows.size());
    for (std::size_t i = 0; i < n; ++i) {
      const EmbeddingWindow& a = base.windows[i];
      const EmbeddingWindow& b = other.windows[i];
      if (!(a.span == b.span) || a.overlap_flag != b.overlap_flag ||
          a.channel_index != b.channel_index) {
        std::ostringstream msg;
        msg << "geometry mismatch between set 0 (" << base.model_id << ") and set " << s << " ("
            << other.model_id << ") at window " << i;
        throw FormatError(msg.str(), static_cast<long>(i));
      }
    }
    if (base.windows.size() != other.windows.size())
      throw FormatError("geometry mismatch: window counts differ between set 0 and set " +
                            std::to_string(s),
                        static_cast<long>(n));
  }
}

namespace {

struct Turn {
  int speaker;
  double start_s;
  double end_s;
};

struct Region {
  TimeSpan span;
  int speaker_a;
  int speaker_b;  // -1 for solo regions
};

void check_synth_config(const SynthConfig& c) {
  if (c.num_speakers < 1) throw std::invalid_argument("synth: num_speakers must be >= 1");
  if (!(c.total_duration_s > 0.0)) throw std::invalid_argument("synth: non-positive duration");
  if (c.overlap_fraction < 0.0 || c.overlap_fraction >= 1.0)
    throw std::invalid_argument("synth: overlap_fraction must be in [0, 1)");
  if (c.noise_sigma < 0.0) throw std::invalid_argument("synth: negative noise_sigma");
  if (c.dim < 1) throw std::invalid_argument("synth: dim must be >= 1");
  if (!(c.turn_min_s <= c.turn_max_s)) throw std::invalid_argument("synth: turn range inverted");
  if (c.turn_min_s < c.window_s)
    throw std::invalid_argument("synth: minimum turn duration must cover one window");
  if (c.total_duration_s < c.turn_min_s)
    throw std::invalid_argument("synth: duration shorter than one turn");
  if (c.model_ids.empty()) throw std::invalid_argument("synth: no model ids");
  if (!c.model_sigmas.empty() && c.model_sigmas.size() != c.model_ids.size())
    throw std::invalid_argument("synth: model_sigmas length must match model_ids");
  for (double s : c.model_sigmas)
    if (s < 0.0) throw std::invalid_argument("synth: negative model sigma");
}

}  // namespace

SynthResult synth_conversation(const SynthConfig& config) {
  check_synth_config(config);
  Rng rng(config.seed);

  // Speaker directions on the unit sphere.
  std::vector<std::vector<double>> directions(config.num_speakers);
  for (auto& dir : directions) {
    dir.resize(config.dim);
    for (double& x : dir) x = rng.gaussian();
    dir = unit_normalize(std::move(dir));
  }

  // Turn-taking timeline; next speaker drawn uniformly among the others.
  std::vector<Turn> turns;
  double t = 0.0;
  int prev = -1;
  while (t < config.total_duration_s - 1e-9) {
    double len = rng.uniform(config.turn_min_s, config.turn_max_s);
    if (t + len > config.total_duration_s) len = config.total_duration_s - t;
    int speaker = 0;
    if (config.num_speakers > 1) {
      speaker = rng.uniform_int(0, config.num_speakers - 2);
      if (prev >= 0 && speaker >= prev) ++speaker;
    }
    turns.push_back(Turn{speaker, t, t + len});
    t += len;
    prev = speaker;
  }
  // A clipped final turn too short for a window is folded into its neighbor.
  if (turns.size() >= 2 && turns.back().end_s - turns.back().start_s < config.window_s) {
    turns[turns.size() - 2].end_s = turns.back().end_s;
    turns.pop_back();
  }
  // Single-speaker recordings collapse to one continuous turn.
  for (std::size_t i = 1; i < turns.size();) {
    if (turns[i].speaker == turns[i - 1].speaker) {
      turns[i - 1].end_s = turns[i].end_s;
      turns.erase(turns.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }

  // Convert a fraction of turn boundaries into overlaps: the next speaker
  // starts early, inside the tail of the current turn. The current turn must
  // keep at least one window of solo speech.
  std::vector<double> trailing_overlap(turns.size(), 0.0);
  for (std::size_t i = 0; i + 1 < turns.size(); ++i) {
    if (rng.uniform() >= config.overlap_fraction) continue;
    const double turn_len = turns[i].end_s - turns[i].start_s;
    const double max_ov = std::min(1.2, turn_len - config.window_s);
    if (max_ov < 0.4) continue;
    trailing_overlap[i] = rng.uniform(0.4, max_ov);
  }

  // Ground truth: one segment per turn, extended backwards over the overlap
  // it enters through.
  std::vector<LabeledSegment> truth_segments;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const double lead = i > 0 ? trailing_overlap[i - 1] : 0.0;
    truth_segments.push_back(LabeledSegment{TimeSpan(turns[i].start_s - lead, turns[i].end_s),
                                            "spk" + std::to_string(turns[i].speaker)});
  }
  Annotation truth{config.recording_id, merge_adjacent(std::move(truth_segments), 0.0)};

  // Windowing regions: solo tail-trimmed turns plus two-speaker overlaps.
  std::vector<Region> regions;
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const double solo_end = turns[i].end_s - trailing_overlap[i];
    regions.push_back(Region{TimeSpan(turns[i].start_s, solo_end), turns[i].speaker, -1});
    if (trailing_overlap[i] > 0.0)
      regions.push_back(Region{TimeSpan(solo_end, turns[i].end_s), turns[i].speaker,
                               turns[i + 1].speaker});
  }

  // Shared window geometry: (span, overlap_flag, channel, speaker direction).
  struct GeomWindow {
    TimeSpan span;
    bool overlap;
    int channel;
    int speaker;
  };
  std::vector<GeomWindow> geometry;
  for (const Region& region : regions) {
    for (const TimeSpan& span : slide_windows(region.span, config.window_s, config.shift_s)) {
      if (region.speaker_b < 0) {
        geometry.push_back(GeomWindow{span, false, 0, region.speaker_a});
      } else {
        geometry.push_back(GeomWindow{span, true, 0, region.speaker_a});
        geometry.push_back(GeomWindow{span, true, 1, region.speaker_b});
      }
    }
  }

  SynthResult result;
  result.truth = std::move(truth);
  for (std::size_t m = 0; m < config.model_ids.size(); ++m) {
    const double sigma = config.model_sigmas.empty() ? config.noise_sigma : config.model_sigmas[m];
    Rng model_rng(Rng::mix(config.seed, m + 1));
    EmbeddingSet set;
    set.recording_id = config.recording_id;
    set.model_id = config.model_ids[m];
    set.dim = config.dim;
    set.windows.reserve(geometry.size());
    for (const GeomWindow& g : geometry) {
      EmbeddingWindow w;
      w.span = g.span;
      w.overlap_flag = g.overlap;
      w.channel_index = g.channel;
      if (sigma == 0.0) {
        w.vector = directions[g.speaker];
      } else {
        const double per_component = sigma / std::sqrt(static_cast<double>(config.dim));
        w.vector.resize(config.dim);
        for (int j = 0; j < config.dim; ++j)
          w.vector[j] = directions[g.speaker][j] + per_component * model_rng.gaussian();
        w.vector = unit_normalize(std::move(w.vector));
      }
      set.windows.push_back(std::move(w));
    }
    validate_set(set);
    result.sets.push_back(std::move(set));
  }
  return result;
}

}  // namespace diar
