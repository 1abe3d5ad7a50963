#pragma once

#include <filesystem>
#include <vector>

#include "chew/dataset.hpp"

namespace chew::postprocess {

using dataset::Interval;

/// Classifier scores for a run of analysis windows, in time order.
struct PredictionTrack {
  std::vector<double> start_s;  // strictly increasing window starts
  std::vector<double> scores;   // parallel to start_s, each in [0, 1]
  double window_s = 5.0;
  double threshold = 0.5;  // score >= threshold counts as chewing
};

/// A chewing bout with the (unioned) chew pulses that produced it.
struct Bout {
  Interval interval;
  std::vector<Interval> chews;
};

/// A meal with its constituent bouts and the chewing-time ratio used by the
/// final filtering rule.
struct Meal {
  Interval interval;
  std::vector<Bout> bouts;
  double bout_ratio = 0.0;  // sum of bout durations / meal duration
};

/// Aggregation rule constants; defaults are the published values.
struct PostprocessConfig {
  double chew_gap_s = 2.0;      // merge chews no more than this far apart
  double min_bout_s = 5.0;      // discard bouts strictly shorter than this
  double bout_gap_s = 60.0;     // merge bouts no more than this far apart
  double min_meal_ratio = 0.25; // discard meals with a smaller bout ratio
};

/// Thresholds the track and turns each maximal run of positive windows into
/// one interval from the run's first start to its last start + window_s.
std::vector<Interval> track_to_pulses(const PredictionTrack& track);

/// Merges chews whose gap (next start minus previous end) is at most
/// max_gap_s. Overlapping or touching chews are unioned first. Input must be
/// sorted by start.
std::vector<Bout> chews_to_bouts(const std::vector<Interval>& chews, double max_gap_s = 2.0);

/// Keeps bouts lasting at least min_duration_s (strictly shorter ones go).
std::vector<Bout> drop_short_bouts(std::vector<Bout> bouts, double min_duration_s = 5.0);

/// Merges bouts whose gap is at most max_gap_s; records constituents and the
/// bout-duration ratio of each meal.
std::vector<Meal> bouts_to_meals(const std::vector<Bout>& bouts, double max_gap_s = 60.0);

/// Keeps meals whose stored bout ratio is at least min_ratio.
std::vector<Meal> filter_meals(std::vector<Meal> meals, double min_ratio = 0.25);

/// Stage outputs of the full chain, kept separately for audit.
struct PipelineResult {
  std::vector<Interval> chews;
  std::vector<Bout> bouts;  // after gap merging and short-bout removal
  std::vector<Meal> meals;  // after ratio filtering
};

PipelineResult run_pipeline(const PredictionTrack& track, const PostprocessConfig& cfg = {});

/// CSV "window_start_s,score" with one row per window.
PredictionTrack load_score_csv(const std::filesystem::path& path, double window_s,
                               double threshold = 0.5);
void save_score_csv(const PredictionTrack& track, const std::filesystem::path& path);

/// CSV "start_s,end_s,bout_ratio" with one row per meal.
void save_meals_csv(const std::vector<Meal>& meals, const std::filesystem::path& path);

}  // namespace chew::postprocess
