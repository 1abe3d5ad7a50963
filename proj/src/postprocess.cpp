#include "chew/postprocess.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <string>

namespace chew::postprocess {

namespace {

std::string format_seconds(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_track(const PredictionTrack& track) {
  if (track.start_s.size() != track.scores.size())
    throw std::invalid_argument("prediction track: start/score length mismatch");
  if (!(track.window_s > 0.0))
    throw std::invalid_argument("prediction track: window duration must be positive");
  if (!(track.threshold >= 0.0) || !(track.threshold <= 1.0))
    throw std::invalid_argument("prediction track: threshold must be in [0, 1]");
  for (std::size_t i = 0; i < track.scores.size(); ++i) {
    if (!(track.scores[i] >= 0.0) || !(track.scores[i] <= 1.0))
      throw std::invalid_argument("prediction track: score out of [0, 1] at index " +
                                  std::to_string(i));
    if (i > 0 && !(track.start_s[i] > track.start_s[i - 1]))
      throw std::invalid_argument("prediction track: start times must increase at index " +
                                  std::to_string(i));
  }
}

void check_sorted(const std::vector<Interval>& ivs, const char* who) {
  for (std::size_t i = 0; i < ivs.size(); ++i) {
    if (!(ivs[i].end_s >= ivs[i].start_s))
      throw std::invalid_argument(std::string(who) + ": inverted interval at index " +
                                  std::to_string(i));
    if (i > 0 && ivs[i].start_s < ivs[i - 1].start_s)
      throw std::invalid_argument(std::string(who) + ": intervals not sorted by start at index " +
                                  std::to_string(i));
  }
}

/// Unions overlapping or touching intervals (gap <= 0) of a start-sorted list.
std::vector<Interval> union_overlaps(const std::vector<Interval>& ivs) {
  std::vector<Interval> out;
  for (const Interval& iv : ivs) {
    if (!out.empty() && iv.start_s <= out.back().end_s) {
      if (iv.end_s > out.back().end_s) out.back().end_s = iv.end_s;
    } else {
      out.push_back(iv);
    }
  }
  return out;
}

}  // namespace

std::vector<Interval> track_to_pulses(const PredictionTrack& track) {
  check_track(track);
  std::vector<Interval> pulses;
  for (std::size_t i = 0; i < track.scores.size(); ++i) {
    const bool positive = track.scores[i] >= track.threshold;
    if (!positive) continue;
    const bool continues = !pulses.empty() && i > 0 && track.scores[i - 1] >= track.threshold;
    if (continues)
      pulses.back().end_s = track.start_s[i] + track.window_s;
    else
      pulses.push_back({track.start_s[i], track.start_s[i] + track.window_s});
  }
  return pulses;
}

std::vector<Bout> chews_to_bouts(const std::vector<Interval>& chews, double max_gap_s) {
  if (!(max_gap_s >= 0.0))
    throw std::invalid_argument("chews_to_bouts: gap threshold must be non-negative");
  check_sorted(chews, "chews_to_bouts");
  std::vector<Bout> bouts;
  for (const Interval& chew : union_overlaps(chews)) {
    if (!bouts.empty() && chew.start_s - bouts.back().interval.end_s <= max_gap_s) {
      bouts.back().interval.end_s = chew.end_s;
      bouts.back().chews.push_back(chew);
    } else {
      bouts.push_back({chew, {chew}});
    }
  }
  return bouts;
}

std::vector<Bout> drop_short_bouts(std::vector<Bout> bouts, double min_duration_s) {
  if (!(min_duration_s >= 0.0))
    throw std::invalid_argument("drop_short_bouts: duration threshold must be non-negative");
  std::vector<Bout> kept;
  for (auto& bout : bouts)
    if (bout.interval.duration_s() >= min_duration_s) kept.push_back(std::move(bout));
  return kept;
}

std::vector<Meal> bouts_to_meals(const std::vector<Bout>& bouts, double max_gap_s) {
  if (!(max_gap_s >= 0.0))
    throw std::invalid_argument("bouts_to_meals: gap threshold must be non-negative");
  for (std::size_t i = 1; i < bouts.size(); ++i)
    if (bouts[i].interval.start_s < bouts[i - 1].interval.end_s)
      throw std::invalid_argument("bouts_to_meals: bouts overlap at index " + std::to_string(i));

  std::vector<Meal> meals;
  for (const Bout& bout : bouts) {
    if (!meals.empty() && bout.interval.start_s - meals.back().interval.end_s <= max_gap_s) {
      meals.back().interval.end_s = bout.interval.end_s;
      meals.back().bouts.push_back(bout);
    } else {
      meals.push_back({bout.interval, {bout}, 0.0});
    }
  }
  for (Meal& meal : meals) {
    double chewing = 0.0;
    for (const Bout& bout : meal.bouts) chewing += bout.interval.duration_s();
    meal.bout_ratio = chewing / meal.interval.duration_s();
  }
  return meals;
}

std::vector<Meal> filter_meals(std::vector<Meal> meals, double min_ratio) {
  if (!(min_ratio >= 0.0) || !(min_ratio <= 1.0))
    throw std::invalid_argument("filter_meals: ratio threshold must be in [0, 1]");
  std::vector<Meal> kept;
  for (auto& meal : meals)
    if (meal.bout_ratio >= min_ratio) kept.push_back(std::move(meal));
  return kept;
}

PipelineResult run_pipeline(const PredictionTrack& track, const PostprocessConfig& cfg) {
  PipelineResult result;
  result.chews = track_to_pulses(track);
  result.bouts = drop_short_bouts(chews_to_bouts(result.chews, cfg.chew_gap_s), cfg.min_bout_s);
  result.meals = filter_meals(bouts_to_meals(result.bouts, cfg.bout_gap_s), cfg.min_meal_ratio);
  return result;
}

PredictionTrack load_score_csv(const std::filesystem::path& path, double window_s,
                               double threshold) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open score file: " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty score file: " + path.string());
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "window_start_s,score")
    throw std::runtime_error("bad score header (expected window_start_s,score): " +
                             path.string());

  PredictionTrack track;
  track.window_s = window_s;
  track.threshold = threshold;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++row;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                               ": expected window_start_s,score");
    try {
      std::size_t used = 0;
      const double start = std::stod(line.substr(0, comma), &used);
      if (used != comma) throw std::invalid_argument("trailing characters");
      const std::string rest = line.substr(comma + 1);
      const double score = std::stod(rest, &used);
      if (used != rest.size()) throw std::invalid_argument("trailing characters");
      track.start_s.push_back(start);
      track.scores.push_back(score);
    } catch (const std::exception&) {
      throw std::runtime_error(path.string() + ": row " + std::to_string(row) +
                               ": cannot parse numbers");
    }
  }
  check_track(track);
  return track;
}

void save_score_csv(const PredictionTrack& track, const std::filesystem::path& path) {
  check_track(track);
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write score file: " + path.string());
  out << "window_start_s,score\n";
  for (std::size_t i = 0; i < track.scores.size(); ++i)
    out << format_seconds(track.start_s[i]) << ',' << format_seconds(track.scores[i]) << '\n';
  if (!out) throw std::runtime_error("short write to score file: " + path.string());
}

void save_meals_csv(const std::vector<Meal>& meals, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write meals file: " + path.string());
  out << "start_s,end_s,bout_ratio\n";
  for (const Meal& meal : meals)
    out << format_seconds(meal.interval.start_s) << ',' << format_seconds(meal.interval.end_s)
        << ',' << format_seconds(meal.bout_ratio) << '\n';
  if (!out) throw std::runtime_error("short write to meals file: " + path.string());
}

}  // namespace chew::postprocess
