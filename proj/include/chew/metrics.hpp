#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace chew::metrics {

/// Binary confusion counts; positive class = chewing = 1.
struct Confusion {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  Confusion& operator+=(const Confusion& other);
};

/// Counts over parallel 0/1 prediction and label lists.
Confusion confusion(const std::vector<int>& predictions, const std::vector<int>& labels);

/// Metrics with an undefined denominator are reported as 0 with the
/// corresponding *_defined flag cleared (instead of NaN), so serialized
/// reports stay clean.
struct MetricsReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double accuracy = 0.0;
  double weighted_accuracy = 0.0;  // mean of the two per-class recalls
  bool precision_defined = true;
  bool recall_defined = true;
  bool f1_defined = true;
  bool weighted_accuracy_defined = true;
};

/// Derives the metric set from counts; rejects an all-zero confusion.
MetricsReport report(const Confusion& c);

/// Compact JSON object with the five metrics and the defined flags.
std::string to_json(const MetricsReport& r);

/// Aligned text table, one row per (label, report).
std::string format_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

}  // namespace chew::metrics
