#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "chew/signal.hpp"

namespace chew::dataset {

/// Half-open time span [start_s, end_s).
struct Interval {
  double start_s = 0.0;
  double end_s = 0.0;

  double duration_s() const { return end_s - start_s; }
  bool operator==(const Interval&) const = default;
};

/// One subject's audio plus its ground-truth chewing spans (sorted, disjoint).
struct Recording {
  std::string subject_id;
  signal::TimeSeries audio;
  std::vector<Interval> chewing;
};

struct LabeledWindow {
  std::vector<double> window;
  int label = 0;  // 1 = chewing
  std::string subject_id;
  double start_s = 0.0;
};

/// Development / holdout subject partition.
struct SubjectSplit {
  std::vector<std::string> development;  // sorted
  std::vector<std::string> holdout;      // sorted
};

struct LosoFold {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;
};

/// Parameters of the synthetic chewing-recording generator. Chews are
/// exponentially decaying band-limited noise bursts repeating at
/// chew_rate_hz inside each meal span, on top of Gaussian background noise.
struct SynthParams {
  double duration_s = 600.0;
  double sample_rate_hz = 2000.0;
  double chew_rate_hz = 1.5;
  double burst_low_hz = 20.0;
  double burst_high_hz = 250.0;
  double burst_decay_s = 0.1;
  double burst_gain = 0.08;
  std::vector<Interval> meal_spans;
  double background_noise_std = 0.01;
  std::uint64_t seed = 0;
};

enum class WavEncoding { pcm16, float32 };

/// Reads a mono RIFF/WAVE file (PCM 16-bit or IEEE float32). PCM samples are
/// scaled by 1/32768. Multichannel or other encodings are rejected.
signal::TimeSeries load_wav(const std::filesystem::path& path);

void save_wav(const std::filesystem::path& path, const signal::TimeSeries& ts,
              WavEncoding encoding = WavEncoding::float32);

/// Reads a `start_s,end_s` CSV; returns intervals sorted by start. Inverted
/// or overlapping rows are rejected with the offending row number.
std::vector<Interval> load_annotations(const std::filesystem::path& path);

void save_annotations(const std::filesystem::path& path,
                      const std::vector<Interval>& intervals);

/// Windows a recording and labels each window 1 iff the chewing-time overlap
/// covers at least `coverage_threshold` of the window duration.
std::vector<LabeledWindow> label_windows(const Recording& rec, std::size_t window_len,
                                         std::size_t stride, double coverage_threshold);

/// Chewing-time coverage of [start_s, end_s) as a fraction of its duration.
double chewing_coverage(const std::vector<Interval>& chewing, double start_s,
                        double end_s);

SubjectSplit make_holdout_split(std::vector<std::string> subject_ids,
                                std::size_t n_holdout, std::uint64_t seed);

/// One fold per development subject: test = that subject, validation =
/// n_validation subjects drawn deterministically from the rest.
std::vector<LosoFold> make_loso_folds(std::vector<std::string> dev_subjects,
                                      std::size_t n_validation, std::uint64_t seed);

Recording synthesize_recording(const SynthParams& params,
                               const std::string& subject_id = "synth");

/// Manifest entry: where a recording's audio and annotations live on disk.
struct ManifestEntry {
  std::string subject_id;
  std::string wav_path;
  std::string annotation_path;
};

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path,
                   const std::vector<ManifestEntry>& entries);

/// Loads audio + annotations for every manifest entry. Relative paths are
/// resolved against the manifest's directory.
std::vector<Recording> load_recordings(const std::filesystem::path& manifest_path);

}  // namespace chew::dataset
