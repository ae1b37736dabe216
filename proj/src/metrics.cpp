// SPDX-License-Identifier: Apache-2.0
#include "nids/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "json.hpp"

#include "nids/error.hpp"

namespace nids {

MetricsReport MetricsReport::from_counts(const ConfusionCounts& c) {
  MetricsReport r;
  r.counts = c;
  const auto total = static_cast<double>(c.total());
  const auto tp = static_cast<double>(c.tp);
  r.accuracy = total > 0 ? static_cast<double>(c.tp + c.tn) / total : 0.0;
  r.precision = c.tp + c.fp > 0 ? tp / static_cast<double>(c.tp + c.fp) : 0.0;
  r.recall = c.tp + c.fn > 0 ? tp / static_cast<double>(c.tp + c.fn) : 0.0;
  r.f1 = r.precision + r.recall > 0
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["tp"] = counts.tp;
  j["tn"] = counts.tn;
  j["fp"] = counts.fp;
  j["fn"] = counts.fn;
  j["accuracy"] = accuracy;
  j["precision"] = precision;
  j["recall"] = recall;
  j["f1"] = f1;
  return j.dump(2);
}

MetricsReport compute_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                              double threshold) {
  if (scores.size() != labels.size()) throw LengthMismatch(scores.size(), labels.size());
  if (scores.empty()) throw EmptyInput("no scores to evaluate");
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw InvalidConfig("threshold must lie in [0, 1]");
  }
  ConfusionCounts c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted = scores[i] >= threshold;
    const bool actual = labels[i] == 1;
    if (predicted && actual) ++c.tp;
    else if (predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return MetricsReport::from_counts(c);
}

std::vector<double> threshold_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) throw InvalidConfig("threshold grid step must lie in (0, 1]");
  const double inverse = 1.0 / step;
  const auto last = static_cast<long>(std::floor(inverse + 1e-9));
  // for steps like 0.01 use k / 100, which rounds to the nearest double of
  // the intended decimal instead of accumulating k * 0.01 error
  const bool integral = std::abs(inverse - std::round(inverse)) < 1e-9;
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(last) + 2);
  for (long k = 0; k <= last; ++k) {
    const double tau = integral ? static_cast<double>(k) / std::round(inverse)
                                : static_cast<double>(k) * step;
    grid.push_back(std::min(1.0, tau));
  }
  if (grid.back() < 1.0) grid.push_back(1.0);
  return grid;
}

ThresholdChoice tune_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels,
                               double grid_step) {
  if (scores.size() != labels.size()) throw LengthMismatch(scores.size(), labels.size());
  if (scores.empty()) throw EmptyInput("no validation scores");
  const auto grid = threshold_grid(grid_step);

  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);
  std::sort(pos.begin(), pos.end());
  std::sort(neg.begin(), neg.end());
  auto at_least = [](const std::vector<double>& sorted, double tau) {
    return static_cast<std::uint64_t>(sorted.end() -
                                      std::lower_bound(sorted.begin(), sorted.end(), tau));
  };

  ThresholdChoice best{grid.front(), -1.0};
  for (double tau : grid) {
    ConfusionCounts c;
    c.tp = at_least(pos, tau);
    c.fn = pos.size() - c.tp;
    c.fp = at_least(neg, tau);
    c.tn = neg.size() - c.fp;
    const double f1 = MetricsReport::from_counts(c).f1;
    if (f1 > best.f1) best = {tau, f1};
  }
  return best;
}

}  // namespace nids
