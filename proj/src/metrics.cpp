#include "chew/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>

namespace chew::metrics {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

Confusion& Confusion::operator+=(const Confusion& other) {
  tp += other.tp;
  fp += other.fp;
  fn += other.fn;
  tn += other.tn;
  return *this;
}

Confusion confusion(const std::vector<int>& predictions, const std::vector<int>& labels) {
  if (predictions.size() != labels.size())
    throw std::invalid_argument("confusion: prediction/label length mismatch");
  if (predictions.empty()) throw std::invalid_argument("confusion: empty inputs");
  Confusion c;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int p = predictions[i];
    const int y = labels[i];
    if ((p != 0 && p != 1) || (y != 0 && y != 1))
      throw std::invalid_argument("confusion: values must be 0 or 1 (index " +
                                  std::to_string(i) + ")");
    if (p == 1 && y == 1)
      ++c.tp;
    else if (p == 1 && y == 0)
      ++c.fp;
    else if (p == 0 && y == 1)
      ++c.fn;
    else
      ++c.tn;
  }
  return c;
}

MetricsReport report(const Confusion& c) {
  if (c.total() == 0) throw std::invalid_argument("report: empty confusion");
  MetricsReport r;

  const double tp = static_cast<double>(c.tp);
  const double fp = static_cast<double>(c.fp);
  const double fn = static_cast<double>(c.fn);
  const double tn = static_cast<double>(c.tn);

  r.precision_defined = c.tp + c.fp > 0;
  if (r.precision_defined) r.precision = tp / (tp + fp);

  r.recall_defined = c.tp + c.fn > 0;
  if (r.recall_defined) r.recall = tp / (tp + fn);

  r.f1_defined = r.precision_defined && r.recall_defined && r.precision + r.recall > 0.0;
  if (r.f1_defined) r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);

  r.accuracy = (tp + tn) / static_cast<double>(c.total());

  const bool has_pos = c.tp + c.fn > 0;
  const bool has_neg = c.tn + c.fp > 0;
  r.weighted_accuracy_defined = has_pos && has_neg;
  if (r.weighted_accuracy_defined)
    r.weighted_accuracy = 0.5 * (tp / (tp + fn) + tn / (tn + fp));

  return r;
}

std::string to_json(const MetricsReport& r) {
  auto flag = [](bool b) { return b ? "true" : "false"; };
  std::string out = "{";
  out += "\"precision\": " + num(r.precision) + ", ";
  out += "\"recall\": " + num(r.recall) + ", ";
  out += "\"f1\": " + num(r.f1) + ", ";
  out += "\"accuracy\": " + num(r.accuracy) + ", ";
  out += "\"weighted_accuracy\": " + num(r.weighted_accuracy) + ", ";
  out += std::string("\"precision_defined\": ") + flag(r.precision_defined) + ", ";
  out += std::string("\"recall_defined\": ") + flag(r.recall_defined) + ", ";
  out += std::string("\"f1_defined\": ") + flag(r.f1_defined) + ", ";
  out += std::string("\"weighted_accuracy_defined\": ") + flag(r.weighted_accuracy_defined);
  out += "}";
  return out;
}

std::string format_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
  std::size_t width = 5;  // "model"
  for (const auto& [label, _] : rows) width = std::max(width, label.size());

  std::string out = "model";
  out.append(width - 5, ' ');
  out += "  prec.   rec.    F1      acc.    w._acc.\n";
  for (const auto& [label, r] : rows) {
    out += label;
    out.append(width - label.size(), ' ');
    char buf[64];
    std::snprintf(buf, sizeof buf, "  %.4f  %.4f  %.4f  %.4f  %.4f\n", r.precision, r.recall,
                  r.f1, r.accuracy, r.weighted_accuracy);
    out += buf;
  }
  return out;
}

}  // namespace chew::metrics
