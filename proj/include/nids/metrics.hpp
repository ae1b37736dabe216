// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace nids {

struct ConfusionCounts {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionCounts&) const = default;
};

// Positive class = malicious. precision, recall and F1 are defined as 0 when
// their denominators vanish.
struct MetricsReport {
  ConfusionCounts counts;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  static MetricsReport from_counts(const ConfusionCounts& counts);
  // {"tp":..,"tn":..,"fp":..,"fn":..,"accuracy":..,"precision":..,"recall":..,"f1":..}
  std::string to_json() const;
  bool operator==(const MetricsReport&) const = default;
};

// A window is predicted malicious iff score >= threshold.
MetricsReport compute_metrics(std::span<const double> scores, std::span<const std::uint8_t> labels,
                              double threshold);

struct ThresholdChoice {
  double threshold = 0.0;
  double f1 = 0.0;
};

// The candidate thresholds k * step for k = 0, 1, ... up to and including 1.
std::vector<double> threshold_grid(double step);

// Smallest grid threshold maximising F1; ties go to the smaller threshold.
ThresholdChoice tune_threshold(std::span<const double> scores, std::span<const std::uint8_t> labels,
                               double grid_step);

}  // namespace nids
