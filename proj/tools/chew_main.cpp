// chew — operator CLI for the chewing-detection pipeline.
//
// Subcommands wire the library modules into reproducible runs driven by a
// single JSON config: synth -> preprocess -> pretrain -> train-head ->
// sweep/holdout -> postprocess. Every run validates its config against the
// full schema (unknown keys rejected), persists the resolved config next to
// its outputs, and exits nonzero with a machine-readable error report on
// failure. Outputs are deterministic per seed; no command mutates its inputs.

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "chew/dataset.hpp"
#include "chew/metrics.hpp"
#include "chew/model.hpp"
#include "chew/postprocess.hpp"
#include "chew/rng.hpp"
#include "chew/signal.hpp"
#include "chew/train.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

using chew::mix_seed;

// Seed-stream salts, distinct from the ones used inside the library.
constexpr std::uint64_t kSaltSynth = 0x53594e54;      // per-subject synthesis
constexpr std::uint64_t kSaltValSplit = 0x5653;       // train/validation subject split
constexpr std::uint64_t kSaltHeadInit = 0x4849;       // head weight init per variant
constexpr std::uint64_t kSaltHeadTrain = 0x4854;      // head training stream per variant

// ---------------------------------------------------------------------------
// Errors: every failure carries a kind (for the exit code and the JSON error
// report) and an optional "what to do" hint.

struct CliError : std::runtime_error {
  std::string kind;  // "config" | "missing_artifact" | "runtime"
  std::string hint;
  CliError(std::string k, const std::string& msg, std::string h = {})
      : std::runtime_error(msg), kind(std::move(k)), hint(std::move(h)) {}
};

CliError config_error(const std::string& msg) { return CliError("config", msg); }

CliError missing_artifact(const std::string& msg, const std::string& hint) {
  return CliError("missing_artifact", msg, hint);
}

// ---------------------------------------------------------------------------
// Config schema. The default config doubles as the schema: every valid key
// exists here, and each default value's JSON type is the required type.

json default_config() {
  return json{
      {"seed", 0},
      {"deterministic", false},
      {"output_dir", "chew-run"},
      {"manifest", ""},
      {"preprocessed_manifest", ""},
      {"variants", {"h_fL", "h_fNL", "h_gNL1_fNL"}},
      {"synth",
       {{"subjects", 6},
        {"duration_s", 600.0},
        {"sample_rate_hz", 2000.0},
        {"first_meal_s", 30.0},
        {"meal_every_s", 120.0},
        {"meal_duration_s", 60.0},
        {"chew_rate_hz", 1.5},
        {"burst_low_hz", 20.0},
        {"burst_high_hz", 250.0},
        {"burst_decay_s", 0.1},
        {"burst_gain", 0.08},
        {"background_noise_std", 0.01}}},
      {"preprocess",
       {{"target_rate_hz", 2000.0}, {"highpass_hz", 20.0}, {"highpass_order", 4}}},
      {"corpus",
       {{"window_len", 10000}, {"stride", 10000}, {"coverage_threshold", 0.5}}},
      {"split", {{"n_holdout", 2}, {"n_validation", 2}}},
      {"augment", {{"amp_low", 0.5}, {"amp_high", 2.0}, {"noise_bound", 0.005}}},
      {"pretrain",
       {{"batch_size", 256},
        {"epochs", 100},
        {"tau", 0.5},
        {"max_lr", 0.3},
        {"warmup_fraction", 0.1},
        {"momentum", 0.9},
        {"weight_decay", 1e-6},
        {"trust_coefficient", 1e-3}}},
      {"head",
       {{"batch_size", 64},
        {"epochs", 100},
        {"lr", 1e-3},
        {"beta1", 0.9},
        {"beta2", 0.999},
        {"epsilon", 1e-8}}},
      {"supervised",
       {{"batch_size", 64},
        {"epochs", 100},
        {"lr", 1e-3},
        {"beta1", 0.9},
        {"beta2", 0.999},
        {"epsilon", 1e-8}}},
      {"sweep", {{"taus", {0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0}}}},
      {"holdout",
       {{"taus", {{"h_fL", 0.5}, {"h_fNL", 0.5}, {"h_gNL1_fNL", 0.5}}}}},
      {"postprocess",
       {{"scores_csv", ""},
        {"threshold", 0.5},
        {"window_s", 5.0},
        {"chew_gap_s", 2.0},
        {"min_bout_s", 5.0},
        {"bout_gap_s", 60.0},
        {"min_meal_ratio", 0.25}}},
  };
}

// Reduced profile so a full end-to-end chain finishes in minutes.
void apply_preset(json& cfg, const std::string& name) {
  if (name != "small")
    throw config_error("unknown preset: " + name + " (available: small)");
  cfg["pretrain"]["epochs"] = 20;
  cfg["pretrain"]["batch_size"] = 64;
  cfg["corpus"]["stride"] = 20000;
  cfg["split"]["n_validation"] = 1;
  cfg["supervised"]["epochs"] = 10;
  cfg["sweep"]["taus"] = {0.5};
}

std::string join_key(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

// Validates `value` against the schema tree: unknown keys are rejected, and
// each leaf must match the schema value's JSON type (integer keys require
// integers; float keys accept any number).
void validate_against(const json& schema, const json& value, const std::string& path) {
  const std::string where = path.empty() ? "config" : "config key " + path;
  if (schema.is_object()) {
    if (!value.is_object()) throw config_error(where + ": expected an object");
    for (const auto& [key, sub] : value.items()) {
      if (!schema.contains(key))
        throw config_error("unknown config key: " + join_key(path, key));
      validate_against(schema.at(key), sub, join_key(path, key));
    }
    return;
  }
  if (schema.is_array()) {
    if (!value.is_array()) throw config_error(where + ": expected an array");
    for (std::size_t i = 0; i < value.size(); ++i)
      validate_against(schema.at(0), value.at(i),
                       path + "[" + std::to_string(i) + "]");
    return;
  }
  if (schema.is_boolean()) {
    if (!value.is_boolean()) throw config_error(where + ": expected true or false");
    return;
  }
  if (schema.is_number_integer() || schema.is_number_unsigned()) {
    if (!value.is_number_integer())
      throw config_error(where + ": expected an integer");
    if (value.get<long long>() < 0)
      throw config_error(where + ": must be nonnegative");
    return;
  }
  if (schema.is_number()) {
    if (!value.is_number()) throw config_error(where + ": expected a number");
    return;
  }
  if (schema.is_string()) {
    if (!value.is_string()) throw config_error(where + ": expected a string");
    return;
  }
  throw config_error(where + ": unsupported schema node");  // unreachable
}

// Deep overlay: objects merge key by key, scalars and arrays replace.
void merge_into(json& base, const json& overlay) {
  if (base.is_object() && overlay.is_object()) {
    for (const auto& [key, sub] : overlay.items()) merge_into(base[key], sub);
    return;
  }
  base = overlay;
}

// --set KEY=VALUE with a dotted key path; VALUE is parsed as JSON, falling
// back to a plain string (so --set output_dir=run needs no quoting).
void apply_set(json& cfg, const std::string& expr) {
  const auto eq = expr.find('=');
  if (eq == std::string::npos || eq == 0)
    throw config_error("--set expects KEY=VALUE, got: " + expr);
  const std::string key = expr.substr(0, eq);
  const std::string raw = expr.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &cfg;
  std::string walked;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos
                                                   ? std::string::npos
                                                   : dot - start);
    walked = join_key(walked, part);
    if (!node->is_object() || !node->contains(part))
      throw config_error("unknown config key: " + walked);
    node = &node->at(part);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  *node = value;
}

struct CliOptions {
  std::string config_path;
  std::string preset;
  std::vector<std::string> sets;
  std::string output_dir;
  std::string manifest;
  std::optional<std::uint64_t> seed;
  bool deterministic = false;
};

std::string resolve_path(const std::string& p) {
  if (p.empty()) return p;
  return fs::absolute(fs::path(p)).lexically_normal().string();
}

void semantic_checks(const json& cfg);

// defaults -> preset -> config file -> --set -> dedicated flags, then a full
// re-validation and path resolution (CHEW_OUTPUT_ROOT anchors a relative
// output_dir).
json resolve_config(const CliOptions& opt) {
  const json schema = default_config();
  json cfg = schema;
  if (!opt.preset.empty()) apply_preset(cfg, opt.preset);
  if (!opt.config_path.empty()) {
    std::ifstream in(opt.config_path);
    if (!in)
      throw missing_artifact("config file not found at " + opt.config_path,
                             "pass --config an existing JSON file");
    json user;
    try {
      user = json::parse(in);
    } catch (const json::parse_error& e) {
      throw config_error("failed to parse " + opt.config_path + ": " + e.what());
    }
    validate_against(schema, user, "");
    merge_into(cfg, user);
  }
  for (const auto& expr : opt.sets) apply_set(cfg, expr);
  if (!opt.output_dir.empty()) cfg["output_dir"] = opt.output_dir;
  if (!opt.manifest.empty()) cfg["manifest"] = opt.manifest;
  if (opt.seed) cfg["seed"] = *opt.seed;
  if (opt.deterministic) cfg["deterministic"] = true;
  validate_against(schema, cfg, "");
  semantic_checks(cfg);

  fs::path out = cfg["output_dir"].get<std::string>();
  if (out.is_relative()) {
    if (const char* root = std::getenv("CHEW_OUTPUT_ROOT")) out = fs::path(root) / out;
  }
  cfg["output_dir"] = fs::absolute(out).lexically_normal().string();
  cfg["manifest"] = resolve_path(cfg["manifest"].get<std::string>());
  cfg["preprocessed_manifest"] =
      resolve_path(cfg["preprocessed_manifest"].get<std::string>());
  cfg["postprocess"]["scores_csv"] =
      resolve_path(cfg["postprocess"]["scores_csv"].get<std::string>());
  return cfg;
}

// ---------------------------------------------------------------------------
// Small shared helpers.

fs::path output_dir(const json& cfg) { return cfg["output_dir"].get<std::string>(); }

fs::path ensure_dir(const fs::path& dir) {
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CliError("runtime", "cannot write " + path.string());
  out << text;
  if (!out) throw CliError("runtime", "failed writing " + path.string());
  std::cout << "wrote " << path.string() << "\n";
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

void write_snapshot(const json& cfg, const std::string& command) {
  const fs::path dir = ensure_dir(output_dir(cfg));
  write_json(dir / (command + ".config.json"), cfg);
}

std::string fmt_tau(double tau) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", tau);
  return buf;
}

json confusion_json(const chew::metrics::Confusion& c) {
  return json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"tn", c.tn}};
}

json report_json(const chew::metrics::MetricsReport& r) {
  return json::parse(chew::metrics::to_json(r));
}

chew::train::Variant parse_variant(const std::string& name) {
  if (name == "h_fL") return chew::train::Variant::h_fL;
  if (name == "h_fNL") return chew::train::Variant::h_fNL;
  if (name == "h_gNL1_fNL") return chew::train::Variant::h_gNL1_fNL;
  throw config_error("unknown variant: " + name +
                     " (expected h_fL, h_fNL, or h_gNL1_fNL)");
}

std::vector<chew::train::Variant> config_variants(const json& cfg) {
  std::vector<chew::train::Variant> out;
  for (const auto& v : cfg["variants"]) {
    const auto variant = parse_variant(v.get<std::string>());
    for (const auto prev : out)
      if (prev == variant)
        throw config_error("variants: duplicate entry " + v.get<std::string>());
    out.push_back(variant);
  }
  if (out.empty()) throw config_error("variants: at least one variant is required");
  return out;
}

// Value checks that the type-level schema cannot express; runs before any
// command does work so bad configs always exit with the config error code.
void semantic_checks(const json& cfg) {
  config_variants(cfg);
  if (cfg["pretrain"]["tau"].get<double>() <= 0)
    throw config_error("pretrain.tau must be positive");
  const auto& taus = cfg["sweep"]["taus"];
  if (taus.empty()) throw config_error("sweep.taus must not be empty");
  for (const auto& t : taus)
    if (t.get<double>() <= 0) throw config_error("sweep.taus entries must be positive");
  for (const auto& [name, t] : cfg["holdout"]["taus"].items())
    if (t.get<double>() <= 0)
      throw config_error("holdout.taus." + name + " must be positive");
}

chew::train::CorpusConfig corpus_config(const json& cfg) {
  chew::train::CorpusConfig c;
  c.window_len = cfg["corpus"]["window_len"].get<std::size_t>();
  c.stride = cfg["corpus"]["stride"].get<std::size_t>();
  c.coverage_threshold = cfg["corpus"]["coverage_threshold"].get<double>();
  return c;
}

chew::train::PretrainConfig pretrain_config(const json& cfg, chew::train::HeadKind kind) {
  const json& p = cfg["pretrain"];
  chew::train::PretrainConfig out;
  out.batch_size = p["batch_size"].get<std::size_t>();
  out.epochs = p["epochs"].get<std::size_t>();
  out.tau = p["tau"].get<double>();
  out.head_kind = kind;
  out.augment.amp_low = cfg["augment"]["amp_low"].get<double>();
  out.augment.amp_high = cfg["augment"]["amp_high"].get<double>();
  out.augment.noise_bound = cfg["augment"]["noise_bound"].get<double>();
  out.augment.seed = cfg["seed"].get<std::uint64_t>();
  out.lars.base_lr = p["max_lr"].get<double>();
  out.lars.momentum = p["momentum"].get<double>();
  out.lars.weight_decay = p["weight_decay"].get<double>();
  out.lars.trust_coefficient = p["trust_coefficient"].get<double>();
  out.schedule.total_epochs = out.epochs;
  out.schedule.warmup_fraction = p["warmup_fraction"].get<double>();
  out.schedule.max_lr = p["max_lr"].get<double>();
  out.seed = cfg["seed"].get<std::uint64_t>();
  return out;
}

chew::train::HeadTrainConfig head_config(const json& section, std::uint64_t seed) {
  chew::train::HeadTrainConfig out;
  out.batch_size = section["batch_size"].get<std::size_t>();
  out.epochs = section["epochs"].get<std::size_t>();
  out.adam.lr = section["lr"].get<double>();
  out.adam.beta1 = section["beta1"].get<double>();
  out.adam.beta2 = section["beta2"].get<double>();
  out.adam.epsilon = section["epsilon"].get<double>();
  out.seed = seed;
  return out;
}

std::vector<chew::dataset::Recording> load_preprocessed(const json& cfg) {
  fs::path manifest = cfg["preprocessed_manifest"].get<std::string>();
  if (manifest.empty()) manifest = output_dir(cfg) / "preprocessed" / "manifest.csv";
  if (!fs::exists(manifest))
    throw missing_artifact("preprocessed manifest not found at " + manifest.string(),
                           "run `chew preprocess` first");
  return chew::dataset::load_recordings(manifest);
}

struct SplitRecordings {
  std::vector<chew::dataset::Recording> development;
  std::vector<chew::dataset::Recording> holdout;
};

SplitRecordings split_recordings(const std::vector<chew::dataset::Recording>& recs,
                                 const json& cfg) {
  std::vector<std::string> ids;
  ids.reserve(recs.size());
  for (const auto& r : recs) ids.push_back(r.subject_id);
  const auto split = chew::dataset::make_holdout_split(
      ids, cfg["split"]["n_holdout"].get<std::size_t>(), cfg["seed"].get<std::uint64_t>());
  const std::set<std::string> hold(split.holdout.begin(), split.holdout.end());
  SplitRecordings out;
  for (const auto& r : recs)
    (hold.count(r.subject_id) ? out.holdout : out.development).push_back(r);
  return out;
}

// Windows of one recording under the corpus config; errors out when the
// window length exceeds every recording rather than silently yielding nothing.
std::vector<chew::dataset::LabeledWindow> windows_of(
    const chew::dataset::Recording& rec, const chew::train::CorpusConfig& corpus) {
  return chew::dataset::label_windows(rec, corpus.window_len, corpus.stride,
                                      corpus.coverage_threshold);
}

std::vector<std::vector<double>> raw_windows(
    const std::vector<chew::dataset::LabeledWindow>& windows) {
  std::vector<std::vector<double>> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.window);
  return out;
}

std::vector<int> labels_of(const std::vector<chew::dataset::LabeledWindow>& windows) {
  std::vector<int> out;
  out.reserve(windows.size());
  for (const auto& w : windows) out.push_back(w.label);
  return out;
}

std::vector<int> classify_features(const chew::model::ModelGraph<float>& h,
                                   const std::vector<std::vector<float>>& features) {
  std::vector<int> out;
  out.reserve(features.size());
  for (const auto& row : features) {
    const std::size_t dim = row.size();
    const chew::Tensor<float> x({dim}, std::vector<float>(row));
    const auto y = chew::model::forward(h, x);
    out.push_back(y.data[0] >= 0.5f ? 1 : 0);
  }
  return out;
}

// ---------------------------------------------------------------------------
// synth: generate a synthetic corpus (N subjects x duration) plus a manifest.

void cmd_synth(const json& cfg) {
  const json& s = cfg["synth"];
  const std::size_t subjects = s["subjects"].get<std::size_t>();
  if (subjects == 0) throw config_error("synth.subjects must be at least 1");
  const double duration = s["duration_s"].get<double>();
  const double first = s["first_meal_s"].get<double>();
  const double every = s["meal_every_s"].get<double>();
  const double length = s["meal_duration_s"].get<double>();
  if (every <= 0 || length <= 0)
    throw config_error("synth.meal_every_s and synth.meal_duration_s must be positive");
  if (length >= every)
    throw config_error("synth.meal_every_s must exceed synth.meal_duration_s");
  std::vector<chew::dataset::Interval> spans;
  for (double t = first; t + length <= duration + 1e-9; t += every)
    spans.push_back({t, t + length});
  if (spans.empty())
    throw config_error("no meal fits: first_meal_s + meal_duration_s exceeds duration_s");

  const fs::path dir = ensure_dir(output_dir(cfg) / "synth");
  const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();
  std::vector<chew::dataset::ManifestEntry> entries;
  for (std::size_t i = 0; i < subjects; ++i) {
    chew::dataset::SynthParams params;
    params.duration_s = duration;
    params.sample_rate_hz = s["sample_rate_hz"].get<double>();
    params.chew_rate_hz = s["chew_rate_hz"].get<double>();
    params.burst_low_hz = s["burst_low_hz"].get<double>();
    params.burst_high_hz = s["burst_high_hz"].get<double>();
    params.burst_decay_s = s["burst_decay_s"].get<double>();
    params.burst_gain = s["burst_gain"].get<double>();
    params.background_noise_std = s["background_noise_std"].get<double>();
    params.meal_spans = spans;
    params.seed = mix_seed({seed, kSaltSynth, i});
    const std::string id = "S" + std::to_string(i);
    const auto rec = chew::dataset::synthesize_recording(params, id);
    chew::dataset::save_wav(dir / (id + ".wav"), rec.audio);
    std::cout << "wrote " << (dir / (id + ".wav")).string() << "\n";
    chew::dataset::save_annotations(dir / (id + ".csv"), rec.chewing);
    std::cout << "wrote " << (dir / (id + ".csv")).string() << "\n";
    entries.push_back({id, id + ".wav", id + ".csv"});
  }
  chew::dataset::save_manifest(dir / "manifest.csv", entries);
  std::cout << "wrote " << (dir / "manifest.csv").string() << "\n";
  std::cout << "synthesized " << subjects << " subjects, " << duration
            << " s each, " << spans.size() << " meals per subject\n";
}

// ---------------------------------------------------------------------------
// preprocess: decimate to the target rate, high-pass, and store the windowing
// decision (subject, start, end, label per window) alongside the audio.

void cmd_preprocess(const json& cfg) {
  fs::path manifest = cfg["manifest"].get<std::string>();
  if (manifest.empty()) manifest = output_dir(cfg) / "synth" / "manifest.csv";
  if (!fs::exists(manifest))
    throw missing_artifact(
        "input manifest not found at " + manifest.string(),
        "run `chew synth` first or point --manifest at an existing corpus");

  const json& p = cfg["preprocess"];
  const double target = p["target_rate_hz"].get<double>();
  if (target <= 0) throw config_error("preprocess.target_rate_hz must be positive");
  const auto highpass = chew::signal::design_highpass_butterworth(
      p["highpass_hz"].get<double>(), target, p["highpass_order"].get<int>());
  const auto corpus = corpus_config(cfg);

  const auto recs = chew::dataset::load_recordings(manifest);
  const fs::path dir = ensure_dir(output_dir(cfg) / "preprocessed");
  std::vector<chew::dataset::ManifestEntry> entries;
  std::ostringstream windows_csv;
  windows_csv << "subject_id,start_s,end_s,label\n";
  std::size_t n_windows = 0;
  for (const auto& rec : recs) {
    const double ratio = rec.audio.sample_rate_hz / target;
    const auto factor = static_cast<std::size_t>(std::llround(ratio));
    if (factor < 1 || std::abs(ratio - static_cast<double>(factor)) > 1e-9)
      throw config_error("sample rate " + std::to_string(rec.audio.sample_rate_hz) +
                         " of subject " + rec.subject_id +
                         " is not an integer multiple of preprocess.target_rate_hz");
    const auto decimated = chew::signal::decimate(rec.audio, factor);
    const auto filtered = chew::signal::filter_forward(highpass, decimated);
    chew::dataset::save_wav(dir / (rec.subject_id + ".wav"), filtered);
    std::cout << "wrote " << (dir / (rec.subject_id + ".wav")).string() << "\n";
    chew::dataset::save_annotations(dir / (rec.subject_id + ".csv"), rec.chewing);
    std::cout << "wrote " << (dir / (rec.subject_id + ".csv")).string() << "\n";
    entries.push_back({rec.subject_id, rec.subject_id + ".wav", rec.subject_id + ".csv"});

    const chew::dataset::Recording processed{rec.subject_id, filtered, rec.chewing};
    const double window_s = static_cast<double>(corpus.window_len) / target;
    for (const auto& w : windows_of(processed, corpus)) {
      char row[128];
      std::snprintf(row, sizeof row, "%s,%.6f,%.6f,%d\n", w.subject_id.c_str(),
                    w.start_s, w.start_s + window_s, w.label);
      windows_csv << row;
      ++n_windows;
    }
  }
  if (n_windows == 0)
    throw config_error(
        "corpus.window_len yields no windows for any subject; reduce it or "
        "lengthen the recordings");
  chew::dataset::save_manifest(dir / "manifest.csv", entries);
  std::cout << "wrote " << (dir / "manifest.csv").string() << "\n";
  write_text(dir / "windows.csv", windows_csv.str());
  std::cout << "preprocessed " << recs.size() << " subjects at " << target
            << " Hz, " << n_windows << " windows\n";
}

// ---------------------------------------------------------------------------
// pretrain: self-supervised training of f (+ projection head) on the
// development subjects, one run per head kind required by the variants.

void cmd_pretrain(const json& cfg) {
  using chew::train::HeadKind;
  const auto recs = load_preprocessed(cfg);
  const auto split = split_recordings(recs, cfg);
  const auto corpus = corpus_config(cfg);
  std::vector<std::vector<double>> windows;
  for (const auto& rec : split.development)
    for (auto& w : windows_of(rec, corpus)) windows.push_back(std::move(w.window));
  if (windows.empty())
    throw config_error("development subjects yield no windows under corpus settings");

  std::vector<HeadKind> kinds;
  for (const auto variant : config_variants(cfg)) {
    const auto kind = chew::train::variant_head_kind(variant);
    if (std::find(kinds.begin(), kinds.end(), kind) == kinds.end())
      kinds.push_back(kind);
  }

  const fs::path dir = ensure_dir(output_dir(cfg) / "models");
  const std::string tau = fmt_tau(cfg["pretrain"]["tau"].get<double>());
  for (const auto kind : kinds) {
    const std::string kind_name = chew::train::head_kind_name(kind);
    std::cout << "pretraining f with the " << kind_name << " projection head (tau="
              << tau << ", " << windows.size() << " windows)...\n";
    const auto result = chew::train::pretrain(windows, pretrain_config(cfg, kind));
    const std::string stem = kind_name + "_tau" + tau;
    chew::model::save_weights(result.f, dir / ("f_" + stem + ".wts"));
    std::cout << "wrote " << (dir / ("f_" + stem + ".wts")).string() << "\n";
    chew::model::save_weights(result.g, dir / ("g_" + stem + ".wts"));
    std::cout << "wrote " << (dir / ("g_" + stem + ".wts")).string() << "\n";
    write_json(dir / ("pretrain_" + stem + ".json"),
               json{{"head_kind", kind_name},
                    {"tau", cfg["pretrain"]["tau"].get<double>()},
                    {"epochs", result.epoch_loss.size()},
                    {"epoch_loss", result.epoch_loss}});
    std::cout << "pretrain (" << kind_name << "): loss " << result.epoch_loss.front()
              << " -> " << result.epoch_loss.back() << " over "
              << result.epoch_loss.size() << " epochs\n";
  }
}

// ---------------------------------------------------------------------------
// train-head: frozen-feature classifier training per variant, using the
// weights written by `pretrain`. Also writes per-subject score tracks for the
// validation subjects so `postprocess` has an upstream artifact.

void cmd_train_head(const json& cfg) {
  using chew::train::Variant;
  const auto recs = load_preprocessed(cfg);
  const auto split = split_recordings(recs, cfg);
  const auto corpus = corpus_config(cfg);
  const std::uint64_t seed = cfg["seed"].get<std::uint64_t>();

  std::vector<std::string> dev_ids;
  for (const auto& rec : split.development) dev_ids.push_back(rec.subject_id);
  const auto val_split = chew::dataset::make_holdout_split(
      dev_ids, cfg["split"]["n_validation"].get<std::size_t>(),
      mix_seed({seed, kSaltValSplit}));
  const std::set<std::string> val_ids(val_split.holdout.begin(), val_split.holdout.end());

  std::vector<chew::dataset::LabeledWindow> train_set, val_set;
  std::vector<std::pair<std::string, std::vector<chew::dataset::LabeledWindow>>>
      val_subjects;
  for (const auto& rec : split.development) {
    auto windows = windows_of(rec, corpus);
    if (val_ids.count(rec.subject_id)) {
      val_set.insert(val_set.end(), windows.begin(), windows.end());
      val_subjects.emplace_back(rec.subject_id, std::move(windows));
    } else {
      train_set.insert(train_set.end(), windows.begin(), windows.end());
    }
  }
  if (train_set.empty())
    throw config_error("split.n_validation leaves no training subjects");
  if (val_set.empty())
    throw config_error("validation subjects yield no windows under corpus settings");

  const fs::path models = ensure_dir(output_dir(cfg) / "models");
  const fs::path scores_dir = ensure_dir(output_dir(cfg) / "scores");
  const std::string tau = fmt_tau(cfg["pretrain"]["tau"].get<double>());
  const double threshold = cfg["postprocess"]["threshold"].get<double>();
  const auto train_raw = raw_windows(train_set);
  const auto val_raw = raw_windows(val_set);

  for (const auto variant : config_variants(cfg)) {
    const std::string name = chew::train::variant_name(variant);
    const std::string kind_name =
        chew::train::head_kind_name(chew::train::variant_head_kind(variant));
    const fs::path f_path = models / ("f_" + kind_name + "_tau" + tau + ".wts");
    if (!fs::exists(f_path))
      throw missing_artifact("pretrained weights not found at " + f_path.string(),
                             "run `chew pretrain` first");
    auto f = chew::model::load_weights<float>(f_path);
    chew::model::ModelGraph<float> stack;
    if (variant == Variant::h_gNL1_fNL) {
      const fs::path g_path = models / ("g_" + kind_name + "_tau" + tau + ".wts");
      if (!fs::exists(g_path))
        throw missing_artifact("pretrained weights not found at " + g_path.string(),
                               "run `chew pretrain` first");
      const auto g = chew::model::load_weights<float>(g_path);
      stack = chew::train::freeze_stack({f, chew::model::split_gNL(g).first});
    } else {
      stack = chew::train::freeze_stack({f});
    }

    chew::train::FeatureSet train_feats{
        chew::train::compute_features(stack, train_raw), labels_of(train_set)};
    chew::train::FeatureSet val_feats{chew::train::compute_features(stack, val_raw),
                                      labels_of(val_set)};
    const auto h = chew::model::build_h<float>(
        mix_seed({seed, kSaltHeadInit, static_cast<std::uint64_t>(variant)}));
    const auto result = chew::train::train_head_on_features(
        train_feats, val_feats, h,
        head_config(cfg["head"],
                    mix_seed({seed, kSaltHeadTrain, static_cast<std::uint64_t>(variant)})));

    const std::string stem = name + "_tau" + tau;  // variant names start with h_
    chew::model::save_weights(result.h, models / (stem + ".wts"));
    std::cout << "wrote " << (models / (stem + ".wts")).string() << "\n";
    const auto val_confusion =
        chew::metrics::confusion(classify_features(result.h, val_feats.x), val_feats.y);
    const auto val_report = chew::metrics::report(val_confusion);
    write_json(models / (stem + ".json"),
               json{{"variant", name},
                    {"tau", cfg["pretrain"]["tau"].get<double>()},
                    {"selected_epoch", result.selected_epoch},
                    {"validation_loss", result.validation_loss},
                    {"train_loss", result.train_loss},
                    {"validation_confusion", confusion_json(val_confusion)},
                    {"validation_metrics", report_json(val_report)}});

    const auto full = chew::train::freeze_stack({stack, result.h});
    for (const auto& [subject, windows] : val_subjects) {
      chew::postprocess::PredictionTrack track;
      track.window_s = static_cast<double>(corpus.window_len) /
                       split.development.front().audio.sample_rate_hz;
      track.threshold = threshold;
      const auto scores = chew::train::predict_scores(full, raw_windows(windows));
      for (std::size_t i = 0; i < windows.size(); ++i) {
        track.start_s.push_back(windows[i].start_s);
        track.scores.push_back(scores[i]);
      }
      const fs::path csv = scores_dir / ("scores_" + stem + "_" + subject + ".csv");
      chew::postprocess::save_score_csv(track, csv);
      std::cout << "wrote " << csv.string() << "\n";
    }
    std::cout << name << ": selected epoch " << result.selected_epoch
              << ", validation F1 " << val_report.f1 << "\n";
  }
}

// ---------------------------------------------------------------------------
// sweep: LOSO grid over (variant, tau) on the development subjects.

void cmd_sweep(const json& cfg) {
  const auto recs = load_preprocessed(cfg);
  const auto split = split_recordings(recs, cfg);
  std::vector<double> taus;
  for (const auto& t : cfg["sweep"]["taus"]) taus.push_back(t.get<double>());
  const auto variants = config_variants(cfg);

  chew::train::SweepConfig sc;
  sc.corpus = corpus_config(cfg);
  sc.pretrain = pretrain_config(cfg, chew::train::HeadKind::nonlinear);
  sc.head = head_config(cfg["head"], cfg["seed"].get<std::uint64_t>());
  sc.n_validation = cfg["split"]["n_validation"].get<std::size_t>();
  sc.seed = cfg["seed"].get<std::uint64_t>();
  const auto rows = chew::train::run_loso_sweep(split.development, taus, variants, sc);

  json rows_json = json::array();
  std::vector<std::pair<std::string, chew::metrics::MetricsReport>> table;
  for (const auto& row : rows) {
    json folds = json::array();
    for (const auto& fold : row.folds)
      folds.push_back(json{{"fold_id", fold.fold_id},
                           {"selected_epoch", fold.selected_epoch},
                           {"validation_loss", fold.validation_loss},
                           {"confusion", confusion_json(fold.confusion)},
                           {"metrics", report_json(fold.test_metrics)}});
    const std::string label =
        chew::train::variant_name(row.variant) + " tau=" + fmt_tau(row.tau);
    rows_json.push_back(json{{"variant", chew::train::variant_name(row.variant)},
                             {"tau", row.tau},
                             {"pooled_confusion", confusion_json(row.pooled)},
                             {"metrics", report_json(row.metrics)},
                             {"folds", folds}});
    table.emplace_back(label, row.metrics);
  }
  const fs::path dir = ensure_dir(output_dir(cfg) / "reports");
  write_json(dir / "sweep.json", json{{"taus", taus},
                                      {"variants", cfg["variants"]},
                                      {"rows", rows_json}});
  const std::string text = chew::metrics::format_table(table);
  write_text(dir / "sweep.txt", text);
  std::cout << text;
}

// ---------------------------------------------------------------------------
// holdout: train the selected variants plus the supervised baseline on the
// development subjects and evaluate everything on the holdout subjects.

void cmd_holdout(const json& cfg) {
  const auto recs = load_preprocessed(cfg);
  if (cfg["split"]["n_holdout"].get<std::size_t>() == 0)
    throw config_error("split.n_holdout must be at least 1 for holdout evaluation");
  const auto split = split_recordings(recs, cfg);

  std::map<chew::train::Variant, double> selections;
  for (const auto variant : config_variants(cfg)) {
    const std::string name = chew::train::variant_name(variant);
    selections[variant] = cfg["holdout"]["taus"][name].get<double>();
  }

  chew::train::HoldoutConfig hc;
  hc.corpus = corpus_config(cfg);
  hc.pretrain = pretrain_config(cfg, chew::train::HeadKind::nonlinear);
  hc.head = head_config(cfg["head"], cfg["seed"].get<std::uint64_t>());
  hc.supervised = head_config(cfg["supervised"], cfg["seed"].get<std::uint64_t>());
  hc.n_validation = cfg["split"]["n_validation"].get<std::size_t>();
  hc.seed = cfg["seed"].get<std::uint64_t>();
  const auto rows = chew::train::run_holdout(split.development, split.holdout,
                                             selections, hc);

  json rows_json = json::array();
  std::vector<std::pair<std::string, chew::metrics::MetricsReport>> table;
  for (const auto& row : rows) {
    rows_json.push_back(json{{"name", row.name},
                             {"tau", row.tau},
                             {"confusion", confusion_json(row.confusion)},
                             {"metrics", report_json(row.metrics)}});
    const std::string label =
        row.name == "supervised" ? row.name : row.name + " tau=" + fmt_tau(row.tau);
    table.emplace_back(label, row.metrics);
  }
  const fs::path dir = ensure_dir(output_dir(cfg) / "reports");
  write_json(dir / "holdout.json", json{{"rows", rows_json}});
  const std::string text = chew::metrics::format_table(table);
  write_text(dir / "holdout.txt", text);
  std::cout << text;
}

// ---------------------------------------------------------------------------
// postprocess: scores CSV -> chews/bouts/meals CSVs via the aggregation rules.

void cmd_postprocess(const json& cfg) {
  const json& p = cfg["postprocess"];
  const std::string csv = p["scores_csv"].get<std::string>();
  if (csv.empty())
    throw config_error(
        "postprocess.scores_csv is not set; run `chew train-head` to produce "
        "score tracks or point it at a CSV with window_start_s,score rows");
  if (!fs::exists(csv))
    throw missing_artifact("scores CSV not found at " + csv,
                           "run `chew train-head` first");
  const auto track = chew::postprocess::load_score_csv(
      csv, p["window_s"].get<double>(), p["threshold"].get<double>());
  chew::postprocess::PostprocessConfig rules;
  rules.chew_gap_s = p["chew_gap_s"].get<double>();
  rules.min_bout_s = p["min_bout_s"].get<double>();
  rules.bout_gap_s = p["bout_gap_s"].get<double>();
  rules.min_meal_ratio = p["min_meal_ratio"].get<double>();
  const auto result = chew::postprocess::run_pipeline(track, rules);

  const fs::path dir = ensure_dir(output_dir(cfg) / "postprocess");
  chew::dataset::save_annotations(dir / "chews.csv", result.chews);
  std::cout << "wrote " << (dir / "chews.csv").string() << "\n";
  std::vector<chew::dataset::Interval> bout_intervals;
  for (const auto& bout : result.bouts) bout_intervals.push_back(bout.interval);
  chew::dataset::save_annotations(dir / "bouts.csv", bout_intervals);
  std::cout << "wrote " << (dir / "bouts.csv").string() << "\n";
  chew::postprocess::save_meals_csv(result.meals, dir / "meals.csv");
  std::cout << "wrote " << (dir / "meals.csv").string() << "\n";
  double meal_s = 0.0;
  for (const auto& meal : result.meals) meal_s += meal.interval.duration_s();
  write_json(dir / "summary.json", json{{"windows", track.scores.size()},
                                        {"chews", result.chews.size()},
                                        {"bouts", result.bouts.size()},
                                        {"meals", result.meals.size()},
                                        {"total_meal_s", meal_s}});
  std::cout << result.chews.size() << " chews -> " << result.bouts.size()
            << " bouts -> " << result.meals.size() << " meals (" << meal_s
            << " s total)\n";
}

void emit_error(const std::string& command, const std::string& kind,
                const std::string& message, const std::string& hint) {
  std::cerr << "error: " << message << "\n";
  if (!hint.empty()) std::cerr << "hint: " << hint << "\n";
  json report{{"error",
               json{{"kind", kind}, {"command", command}, {"message", message}}}};
  if (!hint.empty()) report["error"]["hint"] = hint;
  std::cerr << report.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "chew: in-ear chewing detection via self-supervised contrastive "
      "pretraining (synth -> preprocess -> pretrain -> train-head -> "
      "sweep/holdout -> postprocess)"};
  app.require_subcommand(1);

  CliOptions opt;
  std::uint64_t seed_value = 0;
  auto* seed_opt = app.add_option("--seed", seed_value, "override the config seed");
  app.add_option("--config", opt.config_path, "JSON config file (schema-validated)");
  app.add_option("--preset", opt.preset, "named config preset (small)");
  app.add_option("--set", opt.sets,
                 "override one config key, e.g. --set pretrain.epochs=20 "
                 "(repeatable; dotted path; value parsed as JSON)");
  app.add_option("--output-dir", opt.output_dir,
                 "output directory (relative paths resolve under $CHEW_OUTPUT_ROOT)");
  app.add_option("--manifest", opt.manifest, "input manifest for preprocess");
  app.add_flag("--deterministic", opt.deterministic,
               "force single-threaded execution for bit-exact reruns");

  const char* descriptions[][2] = {
      {"synth", "generate a synthetic corpus (subjects x duration) + manifest"},
      {"preprocess", "decimate to the target rate, high-pass, store windows"},
      {"pretrain", "self-supervised pretraining of f; writes f/g weights + loss curve"},
      {"train-head", "train the classifier head per variant on frozen features"},
      {"sweep", "LOSO sweep over (variant, tau) on the development subjects"},
      {"holdout", "final holdout evaluation incl. the supervised baseline"},
      {"postprocess", "scores CSV -> chews/bouts/meals CSVs"},
  };
  for (const auto& d : descriptions) app.add_subcommand(d[0], d[1])->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help and friends
    const int code = app.exit(e);
    json report{{"error", json{{"kind", "usage"}, {"message", e.what()}}}};
    std::cerr << report.dump() << "\n";
    return code == 0 ? 2 : code;
  }
  if (seed_opt->count() > 0) opt.seed = seed_value;
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    const json cfg = resolve_config(opt);
    if (cfg["deterministic"].get<bool>()) Eigen::setNbThreads(1);
    write_snapshot(cfg, command);
    if (command == "synth") cmd_synth(cfg);
    else if (command == "preprocess") cmd_preprocess(cfg);
    else if (command == "pretrain") cmd_pretrain(cfg);
    else if (command == "train-head") cmd_train_head(cfg);
    else if (command == "sweep") cmd_sweep(cfg);
    else if (command == "holdout") cmd_holdout(cfg);
    else if (command == "postprocess") cmd_postprocess(cfg);
    return 0;
  } catch (const CliError& e) {
    emit_error(command, e.kind, e.what(), e.hint);
    return e.kind == "config" ? 2 : e.kind == "missing_artifact" ? 3 : 1;
  } catch (const std::exception& e) {
    emit_error(command, "runtime", e.what(), "");
    return 1;
  }
}
