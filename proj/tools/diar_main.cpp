// diar: speaker-diarization clustering toolkit CLI.
//
// Subcommands:
//   diarize  - embedding archives -> RTTM (+ run manifest)
//   score    - reference vs hypothesis RTTM -> DER/JER/MS/FA
//   synth    - synthetic conversation generator (ground truth + archives)
//   inspect  - archive stats and affinity matrix dumps
//
// Exit codes: 0 success, 1 usage/config, 2 input format, 3 internal.

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "diar/embeddings.hpp"
#include "diar/error.hpp"
#include "diar/pipeline.hpp"
#include "diar/scoring.hpp"
#include "diar/timeline.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "0.1.0";

class UsageError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// --- config ---------------------------------------------------------------

diar::DiarizationConfig config_from_json(const json& j) {
  static const std::set<std::string> known{
      "window_s",          "shift_s",           "prune_keep_fraction",
      "boost_delta",       "merge_threshold",   "leakage_threshold",
      "leakage_centroid_threshold", "min_k",    "max_k",
      "collar_s",          "frame_step_s",      "seed",
      "affinity_variant",  "fuse_before_manipulation", "assign_overlap_before_merge"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.contains(key)) throw UsageError("unknown config key: " + key);
  }
  diar::DiarizationConfig c;
  if (j.contains("window_s")) c.window_s = j["window_s"].get<double>();
  if (j.contains("shift_s")) c.shift_s = j["shift_s"].get<double>();
  if (j.contains("prune_keep_fraction")) c.prune_keep_fraction = j["prune_keep_fraction"].get<double>();
  if (j.contains("boost_delta")) c.boost_delta = j["boost_delta"].get<double>();
  if (j.contains("merge_threshold")) c.merge_threshold = j["merge_threshold"].get<double>();
  if (j.contains("leakage_threshold")) c.leakage_threshold = j["leakage_threshold"].get<double>();
  if (j.contains("leakage_centroid_threshold"))
    c.leakage_centroid_threshold = j["leakage_centroid_threshold"].get<double>();
  if (j.contains("min_k")) c.min_k = j["min_k"].get<int>();
  if (j.contains("max_k")) c.max_k = j["max_k"].get<int>();
  if (j.contains("collar_s")) c.collar_s = j["collar_s"].get<double>();
  if (j.contains("frame_step_s")) c.frame_step_s = j["frame_step_s"].get<double>();
  if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("affinity_variant"))
    c.affinity_variant = diar::affinity_variant_from_string(j["affinity_variant"].get<std::string>());
  if (j.contains("fuse_before_manipulation"))
    c.fuse_before_manipulation = j["fuse_before_manipulation"].get<bool>();
  if (j.contains("assign_overlap_before_merge"))
    c.assign_overlap_before_merge = j["assign_overlap_before_merge"].get<bool>();
  return c;
}

json config_to_json(const diar::DiarizationConfig& c) {
  json j;
  j["window_s"] = c.window_s;
  j["shift_s"] = c.shift_s;
  j["prune_keep_fraction"] = c.prune_keep_fraction;
  j["boost_delta"] = c.boost_delta;
  j["merge_threshold"] = c.merge_threshold;
  j["leakage_threshold"] = c.leakage_threshold;
  j["leakage_centroid_threshold"] = c.leakage_centroid_threshold;
  j["min_k"] = c.min_k;
  j["max_k"] = c.max_k;
  j["collar_s"] = c.collar_s;
  j["frame_step_s"] = c.frame_step_s;
  j["seed"] = c.seed;
  j["affinity_variant"] = diar::to_string(c.affinity_variant);
  j["fuse_before_manipulation"] = c.fuse_before_manipulation;
  j["assign_overlap_before_merge"] = c.assign_overlap_before_merge;
  return j;
}

diar::DiarizationConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError(std::string("bad config JSON: ") + e.what());
  }
  return config_from_json(j);
}

void write_text_file(const fs::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw std::runtime_error("failed to write " + path.string());
}

// --- diarize --------------------------------------------------------------

struct DiarizeOptions {
  std::vector<std::string> embeddings;  // one path per model (file or directory)
  std::string config_path;
  std::string out;
  std::string energies;
  std::string manifest;
  int jobs = 1;
  diar::DiarizationConfig config;
};

struct RecordingJob {
  std::string name;                   // file stem
  std::vector<std::string> archives;  // one per model
  std::string energies_path;          // optional
};

struct RecordingOutcome {
  std::string recording_id;
  std::string rttm;
  fs::path output_path;
  std::size_t num_windows = 0;
  std::size_t num_overlap_windows = 0;
  int num_speakers = 0;
  std::size_t num_removed = 0;
  std::size_t num_merges = 0;
  double elapsed_ms = 0.0;
};

std::vector<double> load_energy_sidecar(const std::string& path, const std::string& recording_id,
                                        double& ratio_threshold) {
  std::ifstream in(path);
  if (!in) throw diar::FormatError("cannot open energy sidecar: " + path);
  json j;
  try {
    in >> j;
    if (j.at("recording_id").get<std::string>() != recording_id)
      throw diar::FormatError("energy sidecar recording_id does not match " + recording_id);
    ratio_threshold = j.value("ratio_threshold", 0.1);
    return j.at("energies").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw diar::FormatError(std::string("bad energy sidecar: ") + e.what());
  }
}

RecordingOutcome run_recording(const RecordingJob& job, const diar::DiarizationConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  std::vector<diar::EmbeddingSet> sets;
  sets.reserve(job.archives.size());
  for (const std::string& path : job.archives) sets.push_back(diar::load_archive(path));
  for (std::size_t m = 1; m < sets.size(); ++m)
    if (sets[m].recording_id != sets[0].recording_id)
      throw diar::FormatError("archives disagree on recording_id: " + sets[0].recording_id +
                              " vs " + sets[m].recording_id);

  if (!job.energies_path.empty()) {
    double ratio_threshold = 0.1;
    const auto rms = load_energy_sidecar(job.energies_path, sets[0].recording_id, ratio_threshold);
    sets = diar::apply_energy_filter(std::move(sets), rms, ratio_threshold);
  }

  const diar::DiarizationResult result = diar::diarize(sets, config);

  RecordingOutcome outcome;
  outcome.recording_id = sets[0].recording_id;
  outcome.rttm = diar::write_rttm({result.annotation});
  outcome.num_windows = sets[0].windows.size();
  for (const auto& w : sets[0].windows) outcome.num_overlap_windows += w.overlap_flag ? 1 : 0;
  outcome.num_speakers = result.num_speakers;
  outcome.num_removed = result.removed_windows.size();
  outcome.num_merges = result.merge_trace.size();
  outcome.elapsed_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return outcome;
}

int cmd_diarize(DiarizeOptions& options) {
  diar::validate_config(options.config);

  // Model inputs are either all files (one recording) or all directories
  // (one directory per model, recordings matched by file name).
  const bool dir_mode = fs::is_directory(options.embeddings.front());
  for (const std::string& path : options.embeddings) {
    if (!fs::exists(path)) throw diar::FormatError("no such embeddings path: " + path);
    if (fs::is_directory(path) != dir_mode)
      throw UsageError("cannot mix archive files and directories in --embeddings");
  }

  std::vector<RecordingJob> jobs;
  if (dir_mode) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(options.embeddings.front()))
      if (entry.path().extension() == ".emb") names.push_back(entry.path().filename().string());
    std::sort(names.begin(), names.end());
    if (names.empty()) throw diar::FormatError("no .emb archives in " + options.embeddings.front());
    for (const std::string& name : names) {
      RecordingJob job;
      job.name = fs::path(name).stem().string();
      for (const std::string& dir : options.embeddings) {
        const fs::path candidate = fs::path(dir) / name;
        if (!fs::exists(candidate))
          throw diar::FormatError("model directory " + dir + " is missing archive " + name);
        job.archives.push_back(candidate.string());
      }
      if (!options.energies.empty())
        job.energies_path = (fs::path(options.energies) / (job.name + ".json")).string();
      jobs.push_back(std::move(job));
    }
  } else {
    RecordingJob job;
    job.name = fs::path(options.embeddings.front()).stem().string();
    job.archives = options.embeddings;
    job.energies_path = options.energies;
    jobs.push_back(std::move(job));
  }

  // Recordings are independent; outputs must not depend on the job count.
  std::vector<RecordingOutcome> outcomes(jobs.size());
  {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&]() {
      for (;;) {
        const std::size_t index = next.fetch_add(1);
        if (index >= jobs.size()) return;
        try {
          outcomes[index] = run_recording(jobs[index], options.config);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    };
    const int thread_count =
        std::max(1, std::min<int>(options.jobs, static_cast<int>(jobs.size())));
    std::vector<std::thread> threads;
    threads.reserve(thread_count);
    for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
    for (auto& thread : threads) thread.join();
    if (failure) std::rethrow_exception(failure);
  }

  // Write outputs in deterministic recording order.
  const bool out_is_dir = jobs.size() > 1 || fs::is_directory(options.out) ||
                          (!options.out.empty() && options.out.back() == '/');
  fs::path manifest_path;
  if (out_is_dir) {
    fs::create_directories(options.out);
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      outcomes[i].output_path = fs::path(options.out) / (jobs[i].name + ".rttm");
      write_text_file(outcomes[i].output_path, outcomes[i].rttm);
    }
    manifest_path = fs::path(options.out) / "manifest.json";
  } else {
    outcomes[0].output_path = options.out;
    if (outcomes[0].output_path.has_parent_path())
      fs::create_directories(outcomes[0].output_path.parent_path());
    write_text_file(outcomes[0].output_path, outcomes[0].rttm);
    manifest_path = options.out + ".manifest.json";
  }
  if (!options.manifest.empty()) manifest_path = options.manifest;

  json manifest;
  manifest["tool"] = "diar";
  manifest["version"] = kToolVersion;
  manifest["command"] = "diarize";
  manifest["seed"] = options.config.seed;
  manifest["config"] = config_to_json(options.config);
  manifest["embeddings"] = options.embeddings;
  if (!options.energies.empty()) manifest["energies"] = options.energies;
  manifest["recordings"] = json::array();
  for (const RecordingOutcome& outcome : outcomes) {
    manifest["recordings"].push_back({{"recording_id", outcome.recording_id},
                                      {"output", outcome.output_path.string()},
                                      {"num_windows", outcome.num_windows},
                                      {"num_overlap_windows", outcome.num_overlap_windows},
                                      {"num_speakers", outcome.num_speakers},
                                      {"num_removed_windows", outcome.num_removed},
                                      {"num_merges", outcome.num_merges},
                                      {"elapsed_ms", outcome.elapsed_ms}});
  }
  write_text_file(manifest_path, manifest.dump(2) + "\n");
  return 0;
}

// --- score ----------------------------------------------------------------

struct ScoreOptions {
  std::string ref_path;
  std::string hyp_path;
  double collar = 0.25;
  double step = 0.01;
  std::string format = "table";
};

struct RecordingScore {
  std::string recording_id;
  diar::DerBreakdown breakdown;
  double jer_pct = 0.0;
  diar::VadRates vad;
  double ref_time_s = 0.0;
  double duration_s = 0.0;
  int ref_speakers = 0;
};

std::vector<diar::Annotation> load_rttm_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw diar::FormatError("cannot open RTTM: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return diar::parse_rttm(buffer.str());
}

int cmd_score(ScoreOptions& options) {
  const auto refs = load_rttm_file(options.ref_path);
  const auto hyps = load_rttm_file(options.hyp_path);
  if (refs.empty()) throw diar::FormatError("reference RTTM has no recordings");

  std::map<std::string, const diar::Annotation*> hyp_by_id;
  for (const auto& hyp : hyps) hyp_by_id[hyp.recording_id] = &hyp;
  std::set<std::string> ref_ids;
  for (const auto& ref : refs) ref_ids.insert(ref.recording_id);
  for (const auto& hyp : hyps)
    if (!ref_ids.contains(hyp.recording_id))
      std::cerr << "warning: hypothesis recording " << hyp.recording_id
                << " has no reference; ignored\n";

  std::vector<RecordingScore> scores;
  for (const auto& ref : refs) {
    RecordingScore score;
    score.recording_id = ref.recording_id;
    const diar::Annotation empty{ref.recording_id, {}};
    const diar::Annotation* hyp = &empty;
    const auto it = hyp_by_id.find(ref.recording_id);
    if (it != hyp_by_id.end()) {
      hyp = it->second;
    } else {
      std::cerr << "warning: recording " << ref.recording_id
                << " missing from hypothesis; scored as 100% missed speech\n";
    }
    score.breakdown = diar::der(ref, *hyp, options.collar, options.step);
    score.jer_pct = diar::jer(ref, *hyp, options.step);
    score.vad = diar::vad_rates(ref, *hyp, options.collar, options.step);
    for (const auto& segment : ref.segments) {
      score.ref_time_s += segment.span.duration();
      score.duration_s = std::max(score.duration_s, segment.span.end_s);
    }
    for (const auto& segment : hyp->segments)
      score.duration_s = std::max(score.duration_s, segment.span.end_s);
    std::set<std::string> speakers;
    for (const auto& segment : ref.segments) speakers.insert(segment.speaker_id);
    score.ref_speakers = static_cast<int>(speakers.size());
    scores.push_back(std::move(score));
  }

  // Aggregate: DER components weighted by reference speaker time, JER by
  // reference speaker count (pooled speakers), VAD rates by duration.
  RecordingScore total;
  total.recording_id = "ALL";
  double der_acc = 0.0, ms_acc = 0.0, fa_acc = 0.0, se_acc = 0.0, jer_acc = 0.0;
  double vad_ms_acc = 0.0, vad_fa_acc = 0.0;
  for (const auto& s : scores) {
    der_acc += s.breakdown.der_pct * s.ref_time_s;
    ms_acc += s.breakdown.missed_speech_pct * s.ref_time_s;
    fa_acc += s.breakdown.false_alarm_pct * s.ref_time_s;
    se_acc += s.breakdown.speaker_error_pct * s.ref_time_s;
    jer_acc += s.jer_pct * s.ref_speakers;
    vad_ms_acc += s.vad.ms_pct * s.duration_s;
    vad_fa_acc += s.vad.fa_pct * s.duration_s;
    total.ref_time_s += s.ref_time_s;
    total.duration_s += s.duration_s;
    total.ref_speakers += s.ref_speakers;
  }
  total.breakdown.der_pct = der_acc / total.ref_time_s;
  total.breakdown.missed_speech_pct = ms_acc / total.ref_time_s;
  total.breakdown.false_alarm_pct = fa_acc / total.ref_time_s;
  total.breakdown.speaker_error_pct = se_acc / total.ref_time_s;
  total.jer_pct = jer_acc / total.ref_speakers;
  total.vad.ms_pct = vad_ms_acc / total.duration_s;
  total.vad.fa_pct = vad_fa_acc / total.duration_s;

  auto row_json = [](const RecordingScore& s) {
    return json{{"recording_id", s.recording_id},
                {"der", s.breakdown.der_pct},
                {"jer", s.jer_pct},
                {"ms", s.vad.ms_pct},
                {"fa", s.vad.fa_pct},
                {"missed_speech", s.breakdown.missed_speech_pct},
                {"false_alarm", s.breakdown.false_alarm_pct},
                {"speaker_error", s.breakdown.speaker_error_pct}};
  };

  if (options.format == "json") {
    json out;
    out["collar_s"] = options.collar;
    out["step_s"] = options.step;
    out["recordings"] = json::array();
    for (const auto& s : scores) out["recordings"].push_back(row_json(s));
    out["aggregate"] = row_json(total);
    std::cout << out.dump(2) << "\n";
  } else if (options.format == "csv") {
    std::cout << "recording_id,der,jer,ms,fa,missed_speech,false_alarm,speaker_error\n";
    auto line = [](const RecordingScore& s) {
      char buf[256];
      std::snprintf(buf, sizeof(buf), "%s,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f,%.4f\n",
                    s.recording_id.c_str(), s.breakdown.der_pct, s.jer_pct, s.vad.ms_pct,
                    s.vad.fa_pct, s.breakdown.missed_speech_pct, s.breakdown.false_alarm_pct,
                    s.breakdown.speaker_error_pct);
      return std::string(buf);
    };
    for (const auto& s : scores) std::cout << line(s);
    std::cout << line(total);
  } else if (options.format == "table") {
    std::printf("%-24s %8s %8s %8s %8s\n", "recording", "DER", "JER", "MS", "FA");
    auto line = [](const RecordingScore& s) {
      std::printf("%-24s %8.2f %8.2f %8.2f %8.2f\n", s.recording_id.c_str(), s.breakdown.der_pct,
                  s.jer_pct, s.vad.ms_pct, s.vad.fa_pct);
    };
    for (const auto& s : scores) line(s);
    std::printf("%-24s %8s %8s %8s %8s\n", "", "------", "------", "------", "------");
    line(total);
  } else {
    throw UsageError("unknown --format: " + options.format);
  }
  return 0;
}

// --- synth ------------------------------------------------------------------

struct SynthOptions {
  int speakers = 4;
  double duration = 300.0;
  double overlap = 0.0;
  double noise = 0.2;
  int models = 1;
  std::uint64_t seed = 0;
  std::string out_dir;
  int dim = 192;
  double turn_min = 3.0;
  double turn_max = 8.0;
  std::string rec_id = "synth";
  std::vector<double> model_noise;
};

int cmd_synth(SynthOptions& options) {
  diar::SynthConfig config;
  config.num_speakers = options.speakers;
  config.total_duration_s = options.duration;
  config.overlap_fraction = options.overlap;
  config.noise_sigma = options.noise;
  config.dim = options.dim;
  config.seed = options.seed;
  config.turn_min_s = options.turn_min;
  config.turn_max_s = options.turn_max;
  config.recording_id = options.rec_id;
  config.model_ids.clear();
  for (int m = 0; m < options.models; ++m) config.model_ids.push_back("model" + std::to_string(m));
  config.model_sigmas = options.model_noise;

  diar::SynthResult result;
  try {
    result = diar::synth_conversation(config);
  } catch (const std::invalid_argument& e) {
    throw UsageError(std::string("infeasible synth config: ") + e.what());
  }

  fs::create_directories(options.out_dir);
  const fs::path base = fs::path(options.out_dir);
  write_text_file(base / (options.rec_id + ".rttm"), diar::write_rttm({result.truth}));
  for (const auto& set : result.sets)
    diar::save_archive(set, (base / (options.rec_id + "." + set.model_id + ".emb")).string());

  std::cerr << "wrote " << result.sets.size() << " archive(s) and ground truth for "
            << options.rec_id << " (" << result.sets[0].windows.size() << " windows)\n";
  return 0;
}

// --- inspect ----------------------------------------------------------------

struct InspectOptions {
  std::string embeddings;
  std::string config_path;
  std::string affinity_csv;
  diar::DiarizationConfig config;
};

int cmd_inspect(InspectOptions& options) {
  const diar::EmbeddingSet set = diar::load_archive(options.embeddings);
  std::size_t overlap_count = 0;
  double t0 = 0.0, t1 = 0.0;
  if (!set.windows.empty()) {
    t0 = set.windows.front().span.start_s;
    t1 = set.windows.front().span.end_s;
  }
  for (const auto& w : set.windows) {
    overlap_count += w.overlap_flag ? 1 : 0;
    t0 = std::min(t0, w.span.start_s);
    t1 = std::max(t1, w.span.end_s);
  }
  std::printf("recording_id: %s\n", set.recording_id.c_str());
  std::printf("model_id:     %s\n", set.model_id.c_str());
  std::printf("dim:          %d\n", set.dim);
  std::printf("windows:      %zu\n", set.windows.size());
  std::printf("overlap:      %zu\n", overlap_count);
  std::printf("span:         %.3f - %.3f s\n", t0, t1);

  if (!options.affinity_csv.empty()) {
    std::vector<diar::EmbeddingWindow> clustered;
    for (const auto& w : set.windows)
      if (!w.overlap_flag) clustered.push_back(w);
    if (clustered.empty()) throw diar::FormatError("no non-overlapped windows to build affinity");
    const auto W =
        diar::manipulate(diar::build_affinity(clustered), options.config.affinity_variant,
                         options.config.prune_keep_fraction, options.config.boost_delta);
    std::string csv;
    char buf[64];
    for (int i = 0; i < W.n; ++i) {
      for (int j = 0; j < W.n; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", W.at(i, j));
        csv += buf;
        csv += j + 1 < W.n ? ',' : '\n';
      }
    }
    write_text_file(options.affinity_csv, csv);
    std::printf("affinity:     %dx%d (%s) -> %s\n", W.n, W.n,
                diar::to_string(options.config.affinity_variant).c_str(),
                options.affinity_csv.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"speaker-diarization clustering toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  DiarizeOptions diarize_options;
  ScoreOptions score_options;
  SynthOptions synth_options;
  InspectOptions inspect_options;

  auto* diarize_cmd = app.add_subcommand("diarize", "diarize embedding archives into RTTM");
  diarize_cmd->add_option("--embeddings", diarize_options.embeddings,
                          "embedding archive per model (file or directory; repeat to fuse)")
      ->required()
      ->expected(-1);
  diarize_cmd->add_option("--config", diarize_options.config_path, "JSON config file");
  diarize_cmd->add_option("--out", diarize_options.out, "output RTTM path (or directory)")
      ->required();
  diarize_cmd->add_option("--energies", diarize_options.energies,
                          "per-window RMS energy sidecar (JSON file, or directory of them)");
  diarize_cmd->add_option("--manifest", diarize_options.manifest, "manifest output path");
  diarize_cmd->add_option("--jobs", diarize_options.jobs, "parallel recordings")
      ->check(CLI::PositiveNumber);
  // Flag overrides applied on top of the config file.
  std::uint64_t seed_override = 0;
  std::string variant_override;
  double prune_override = 0.0, boost_override = 0.0, merge_override = 0.0;
  int min_k_override = 0, max_k_override = 0;
  bool fuse_first = false, overlap_first = false;
  auto* seed_opt = diarize_cmd->add_option("--seed", seed_override, "clustering seed");
  auto* variant_opt = diarize_cmd->add_option("--affinity-variant", variant_override,
                                              "pruned|binarized|normalized|boosted");
  auto* prune_opt =
      diarize_cmd->add_option("--prune-keep", prune_override, "row pruning keep fraction (0,1]");
  auto* boost_opt = diarize_cmd->add_option("--boost-delta", boost_override, "affinity boost");
  auto* merge_opt =
      diarize_cmd->add_option("--merge-threshold", merge_override, "centroid merge threshold");
  auto* min_k_opt = diarize_cmd->add_option("--min-k", min_k_override, "minimum speaker count");
  auto* max_k_opt = diarize_cmd->add_option("--max-k", max_k_override, "maximum speaker count");
  diarize_cmd->add_flag("--fuse-before-manipulation", fuse_first,
                        "average raw affinities before pruning/boosting");
  diarize_cmd->add_flag("--assign-overlap-before-merge", overlap_first,
                        "map overlapped windows before cluster merging");

  auto* score_cmd = app.add_subcommand("score", "score hypothesis RTTM against reference");
  score_cmd->add_option("--ref", score_options.ref_path, "reference RTTM")->required();
  score_cmd->add_option("--hyp", score_options.hyp_path, "hypothesis RTTM")->required();
  score_cmd->add_option("--collar", score_options.collar, "scoring collar (s)");
  score_cmd->add_option("--step", score_options.step, "frame step (s)");
  score_cmd->add_option("--format", score_options.format, "table|csv|json");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic conversation");
  synth_cmd->add_option("--speakers", synth_options.speakers, "speaker count")->required();
  synth_cmd->add_option("--duration", synth_options.duration, "duration (s)")->required();
  synth_cmd->add_option("--overlap", synth_options.overlap, "overlapping boundary fraction");
  synth_cmd->add_option("--noise", synth_options.noise, "embedding noise (perturbation norm)");
  synth_cmd->add_option("--models", synth_options.models, "number of embedding models");
  synth_cmd->add_option("--seed", synth_options.seed, "generator seed");
  synth_cmd->add_option("--out-dir", synth_options.out_dir, "output directory")->required();
  synth_cmd->add_option("--dim", synth_options.dim, "embedding dimension");
  synth_cmd->add_option("--turn-min", synth_options.turn_min, "minimum turn length (s)");
  synth_cmd->add_option("--turn-max", synth_options.turn_max, "maximum turn length (s)");
  synth_cmd->add_option("--rec-id", synth_options.rec_id, "recording id");
  synth_cmd->add_option("--model-noise", synth_options.model_noise,
                        "per-model noise overrides (repeat per model)");

  auto* inspect_cmd = app.add_subcommand("inspect", "print archive stats");
  inspect_cmd->add_option("--embeddings", inspect_options.embeddings, "embedding archive")
      ->required();
  inspect_cmd->add_option("--config", inspect_options.config_path, "JSON config file");
  inspect_cmd->add_option("--affinity-csv", inspect_options.affinity_csv,
                          "dump the manipulated affinity matrix as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (diarize_cmd->parsed()) {
      if (!diarize_options.config_path.empty())
        diarize_options.config = load_config_file(diarize_options.config_path);
      if (seed_opt->count() > 0) diarize_options.config.seed = seed_override;
      if (variant_opt->count() > 0)
        diarize_options.config.affinity_variant =
            diar::affinity_variant_from_string(variant_override);
      if (prune_opt->count() > 0) diarize_options.config.prune_keep_fraction = prune_override;
      if (boost_opt->count() > 0) diarize_options.config.boost_delta = boost_override;
      if (merge_opt->count() > 0) diarize_options.config.merge_threshold = merge_override;
      if (min_k_opt->count() > 0) diarize_options.config.min_k = min_k_override;
      if (max_k_opt->count() > 0) diarize_options.config.max_k = max_k_override;
      if (fuse_first) diarize_options.config.fuse_before_manipulation = true;
      if (overlap_first) diarize_options.config.assign_overlap_before_merge = true;
      return cmd_diarize(diarize_options);
    }
    if (score_cmd->parsed()) return cmd_score(score_options);
    if (synth_cmd->parsed()) return cmd_synth(synth_options);
    if (inspect_cmd->parsed()) {
      if (!inspect_options.config_path.empty())
        inspect_options.config = load_config_file(inspect_options.config_path);
      return cmd_inspect(inspect_options);
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const diar::ParseError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const diar::FormatError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 3;
  }
  return 1;
}
