#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "chew/dataset.hpp"
#include "chew/rng.hpp"

namespace chew::dataset {
namespace {

using nlohmann::json;

std::string format_seconds(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_interval(const Interval& iv, const std::string& context) {
  if (!(iv.start_s >= 0.0))
    throw std::invalid_argument(context + ": interval start must be non-negative, got " +
                                format_seconds(iv.start_s));
  if (!(iv.start_s < iv.end_s))
    throw std::invalid_argument(context + ": interval must satisfy start < end, got [" +
                                format_seconds(iv.start_s) + ", " +
                                format_seconds(iv.end_s) + ")");
}

void check_sorted_disjoint(const std::vector<Interval>& ivs, const std::string& context) {
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    check_interval(ivs[i], context);
    if (i > 0 && ivs[i].start_s < ivs[i - 1].end_s)
      throw std::invalid_argument(context + ": intervals overlap at index " +
                                  std::to_string(i));
  }
}

std::vector<std::string> sorted_unique_ids(std::vector<std::string> ids,
                                           const std::string& context) {
  if (ids.empty()) throw std::invalid_argument(context + ": no subject ids given");
  std::sort(ids.begin(), ids.end());
  if (std::adjacent_find(ids.begin(), ids.end()) != ids.end())
    throw std::invalid_argument(context + ": duplicate subject id");
  return ids;
}

}  // namespace

std::vector<Interval> load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open annotation file: " + path.string());

  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error("empty annotation file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "start_s,end_s")
    throw std::runtime_error("bad annotation header (expected start_s,end_s): " +
                             path.string());

  std::vector<std::pair<Interval, std::size_t>> rows;  // interval + 1-based data row
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                               ": expected start_s,end_s");
    Interval iv;
    try {
      std::size_t used = 0;
      iv.start_s = std::stod(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("trailing characters");
      const std::string rest = line.substr(comma + 1);
      iv.end_s = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("trailing characters");
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                               ": cannot parse numbers");
    }
    if (!(iv.start_s >= 0.0) || !(iv.start_s < iv.end_s))
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                               ": invalid interval [" + format_seconds(iv.start_s) + ", " +
                               format_seconds(iv.end_s) + ")");
    rows.emplace_back(iv, row);
  }

  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) {
    return a.first.start_s < b.first.start_s;
  });
  std::vector<Interval> out;
  out.reserve(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].first.start_s < rows[i - 1].first.end_s)
      throw std::runtime_error(path.string() + ": row " + std::to_string(rows[i].second) +
                               ": overlaps row " + std::to_string(rows[i - 1].second));
    out.push_back(rows[i].first);
  }
  return out;
}

void save_annotations(const std::filesystem::path& path,
                      const std::vector<Interval>& intervals) {
  check_sorted_disjoint(intervals, "save_annotations");
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write annotation file: " + path.string());
  out << "start_s,end_s\n";
  for (const auto& iv : intervals)
    out << format_seconds(iv.start_s) << ',' << format_seconds(iv.end_s) << '\n';
  if (!out) throw std::runtime_error("short write to annotation file: " + path.string());
}

double chewing_coverage(const std::vector<Interval>& chewing, double start_s,
                        double end_s) {
  if (!(start_s < end_s)) throw std::invalid_argument("chewing_coverage: empty window");
  double covered = 0.0;
  for (const auto& iv : chewing) {
    const double lo = std::max(start_s, iv.start_s);
    const double hi = std::min(end_s, iv.end_s);
    if (hi > lo) covered += hi - lo;
  }
  return covered / (end_s - start_s);
}

std::vector<LabeledWindow> label_windows(const Recording& rec, std::size_t window_len,
                                         std::size_t stride,
                                         double coverage_threshold) {
  if (!(coverage_threshold > 0.0) || !(coverage_threshold <= 1.0))
    throw std::invalid_argument("label_windows: coverage threshold must be in (0, 1]");
  check_sorted_disjoint(rec.chewing, "label_windows");

  const auto wm = signal::extract_windows(rec.audio, window_len, stride);
  const double window_dur = static_cast<double>(window_len) / rec.audio.sample_rate_hz;
  std::vector<LabeledWindow> out;
  out.reserve(wm.windows.size());
  for (std::size_t i = 0; i < wm.windows.size(); ++i) {
    LabeledWindow lw;
    lw.window = wm.windows[i];
    lw.subject_id = rec.subject_id;
    lw.start_s = wm.origin_times_s[i];
    const double cov = chewing_coverage(rec.chewing, lw.start_s, lw.start_s + window_dur);
    lw.label = cov >= coverage_threshold ? 1 : 0;
    out.push_back(std::move(lw));
  }
  return out;
}

SubjectSplit make_holdout_split(std::vector<std::string> subject_ids,
                                std::size_t n_holdout, std::uint64_t seed) {
  auto ids = sorted_unique_ids(std::move(subject_ids), "make_holdout_split");
  if (n_holdout >= ids.size())
    throw std::invalid_argument("make_holdout_split: n_holdout " +
                                std::to_string(n_holdout) + " must be < " +
                                std::to_string(ids.size()) + " subjects");

  SeededRng rng(mix_seed({seed, 0x5b1d5u}));
  rng.shuffle(ids.begin(), ids.end());
  SubjectSplit split;
  split.holdout.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_holdout));
  split.development.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_holdout),
                           ids.end());
  std::sort(split.holdout.begin(), split.holdout.end());
  std::sort(split.development.begin(), split.development.end());
  return split;
}

std::vector<LosoFold> make_loso_folds(std::vector<std::string> dev_subjects,
                                      std::size_t n_validation, std::uint64_t seed) {
  auto ids = sorted_unique_ids(std::move(dev_subjects), "make_loso_folds");
  if (ids.size() < 2)
    throw std::invalid_argument("make_loso_folds: need at least 2 subjects");
  if (n_validation >= ids.size() - 1)
    throw std::invalid_argument("make_loso_folds: n_validation " +
                                std::to_string(n_validation) + " must be < " +
                                std::to_string(ids.size() - 1) +
                                " (leave room for train and test)");

  std::vector<LosoFold> folds;
  folds.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    LosoFold fold;
    fold.test = {ids[i]};
    std::vector<std::string> rest;
    rest.reserve(ids.size() - 1);
    for (std::size_t j = 0; j < ids.size(); ++j)
      if (j != i) rest.push_back(ids[j]);
    SeededRng rng(mix_seed({seed, 0xf01d5u, static_cast<std::uint64_t>(i)}));
    rng.shuffle(rest.begin(), rest.end());
    fold.validation.assign(rest.begin(),
                           rest.begin() + static_cast<std::ptrdiff_t>(n_validation));
    fold.train.assign(rest.begin() + static_cast<std::ptrdiff_t>(n_validation),
                      rest.end());
    std::sort(fold.validation.begin(), fold.validation.end());
    std::sort(fold.train.begin(), fold.train.end());
    folds.push_back(std::move(fold));
  }
  return folds;
}

Recording synthesize_recording(const SynthParams& params, const std::string& subject_id) {
  if (!(params.duration_s > 0.0))
    throw std::invalid_argument("synthesize_recording: duration must be positive");
  if (!(params.sample_rate_hz > 0.0))
    throw std::invalid_argument("synthesize_recording: sample rate must be positive");
  if (!(params.chew_rate_hz > 0.0))
    throw std::invalid_argument("synthesize_recording: chew rate must be positive");
  if (!(params.burst_low_hz > 0.0) || !(params.burst_high_hz > params.burst_low_hz))
    throw std::invalid_argument("synthesize_recording: need 0 < burst_low_hz < burst_high_hz");
  if (!(params.burst_high_hz < 0.5 * params.sample_rate_hz))
    throw std::invalid_argument("synthesize_recording: burst band exceeds Nyquist");
  if (!(params.burst_decay_s > 0.0))
    throw std::invalid_argument("synthesize_recording: burst decay must be positive");
  if (!(params.burst_gain > 0.0))
    throw std::invalid_argument("synthesize_recording: burst gain must be positive");
  if (!(params.background_noise_std > 0.0))
    throw std::invalid_argument("synthesize_recording: background noise std must be positive");
  check_sorted_disjoint(params.meal_spans, "synthesize_recording");
  if (!params.meal_spans.empty() && params.meal_spans.back().end_s > params.duration_s)
    throw std::invalid_argument("synthesize_recording: meal span exceeds duration");

  const double fs = params.sample_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(params.duration_s * fs));
  Recording rec;
  rec.subject_id = subject_id;
  rec.audio.sample_rate_hz = fs;
  rec.audio.samples.resize(n);
  rec.chewing = params.meal_spans;

  SeededRng rng(params.seed);
  for (std::size_t i = 0; i < n; ++i)
    rec.audio.samples[i] = rng.normal() * params.background_noise_std;

  // Each chew: band-limited noise realized as a random sum of sinusoids in
  // the burst band, shaped by an exponential decay.
  constexpr int kSinusoids = 8;
  const double amp = params.burst_gain / std::sqrt(kSinusoids / 2.0);
  const double period = 1.0 / params.chew_rate_hz;
  for (const auto& span : params.meal_spans) {
    for (double onset = span.start_s; onset < span.end_s; onset += period) {
      double freq[kSinusoids], phase[kSinusoids];
      for (int j = 0; j < kSinusoids; ++j) {
        freq[j] = rng.uniform(params.burst_low_hz, params.burst_high_hz);
        phase[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
      }
      const double burst_dur = std::min(period, span.end_s - onset);
      const auto start_idx = static_cast<std::size_t>(std::llround(onset * fs));
      const auto burst_len = static_cast<std::size_t>(burst_dur * fs);
      for (std::size_t k = 0; k < burst_len && start_idx + k < n; ++k) {
        const double t = static_cast<double>(k) / fs;
        double s = 0.0;
        for (int j = 0; j < kSinusoids; ++j)
          s += std::sin(2.0 * std::numbers::pi * freq[j] * t + phase[j]);
        rec.audio.samples[start_idx + k] +=
            amp * std::exp(-t / params.burst_decay_s) * s;
      }
    }
  }
  return rec;
}

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("manifest parse error: " + path.string() + ": " + e.what());
  }
  if (!doc.is_array())
    throw std::runtime_error("manifest must be a JSON list: " + path.string());

  std::vector<ManifestEntry> entries;
  entries.reserve(doc.size());
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const auto& item = doc[i];
    for (const char* key : {"subject_id", "wav_path", "annotation_path"})
      if (!item.contains(key) || !item[key].is_string())
        throw std::runtime_error("manifest entry " + std::to_string(i) +
                                 " missing string field " + key + ": " + path.string());
    entries.push_back({item["subject_id"].get<std::string>(),
                       item["wav_path"].get<std::string>(),
                       item["annotation_path"].get<std::string>()});
  }
  return entries;
}

void save_manifest(const std::filesystem::path& path,
                   const std::vector<ManifestEntry>& entries) {
  json doc = json::array();
  for (const auto& e : entries)
    doc.push_back({{"subject_id", e.subject_id},
                   {"wav_path", e.wav_path},
                   {"annotation_path", e.annotation_path}});
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("short write to manifest: " + path.string());
}

std::vector<Recording> load_recordings(const std::filesystem::path& manifest_path) {
  const auto entries = load_manifest(manifest_path);
  const auto base = manifest_path.parent_path();
  auto resolve = [&](const std::string& p) {
    std::filesystem::path fp(p);
    return fp.is_absolute() ? fp : base / fp;
  };

  std::vector<Recording> recs;
  recs.reserve(entries.size());
  for (const auto& e : entries) {
    Recording rec;
    rec.subject_id = e.subject_id;
    rec.audio = load_wav(resolve(e.wav_path));
    rec.chewing = load_annotations(resolve(e.annotation_path));
    if (!rec.chewing.empty() && rec.chewing.back().end_s > rec.audio.duration_s())
      throw std::runtime_error("subject " + e.subject_id +
                               ": annotation extends past end of audio");
    recs.push_back(std::move(rec));
  }
  return recs;
}

}  // namespace chew::dataset
