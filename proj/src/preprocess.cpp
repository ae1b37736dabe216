// SPDX-License-Identifier: Apache-2.0
#include "nids/preprocess.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>

#include "nids/error.hpp"

namespace nids {

namespace {

// Largest-remainder apportionment of `count` items over the three ratios;
// remainder ties go train -> val -> test.
std::array<std::size_t, 3> apportion(std::size_t count, const SplitRatios& r) {
  const std::array<double, 3> ratio{r.train, r.val, r.test};
  std::array<std::size_t, 3> take{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double quota = ratio[s] * static_cast<double>(count);
    take[s] = static_cast<std::size_t>(std::floor(quota + 1e-9));
    frac[s] = std::max(0.0, quota - static_cast<double>(take[s]));
    assigned += take[s];
  }
  while (assigned < count) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (frac[s] > frac[best] + 1e-12) best = s;
    }
    ++take[best];
    frac[best] = -1.0;
    ++assigned;
  }
  while (assigned > count) {  // only reachable through the 1e-9 nudge
    for (int s = 2; s >= 0 && assigned > count; --s) {
      if (take[s] > 0) {
        --take[s];
        --assigned;
      }
    }
  }
  return take;
}

void sort_by_origin(std::vector<SequenceWindow>& windows) {
  std::stable_sort(windows.begin(), windows.end(),
                   [](const SequenceWindow& a, const SequenceWindow& b) {
                     return a.origin_index < b.origin_index;
                   });
}

}  // namespace

// ---------------------------------------------------------------- encoder

std::vector<std::string> default_log1p_columns() {
  return {"IN_BYTES", "OUT_BYTES", "IN_PKTS", "OUT_PKTS"};
}

FeatureEncoder fit_encoder(std::span<const FlowRecord> train_records,
                           const std::vector<std::string>& feature_names,
                           const std::vector<std::string>& log1p_columns) {
  if (train_records.empty()) throw EmptyInput("cannot fit encoder on zero records");
  const std::size_t n = feature_names.size();
  FeatureEncoder enc;
  enc.feature_names = feature_names;
  enc.log1p_mask.assign(n, false);
  for (std::size_t f = 0; f < n; ++f) {
    enc.log1p_mask[f] = std::find(log1p_columns.begin(), log1p_columns.end(), feature_names[f]) !=
                        log1p_columns.end();
  }
  enc.min.assign(n, std::numeric_limits<double>::infinity());
  enc.max.assign(n, -std::numeric_limits<double>::infinity());
  for (const auto& rec : train_records) {
    if (rec.features.size() != n) throw ArityMismatch(n, rec.features.size());
    for (std::size_t f = 0; f < n; ++f) {
      double v = rec.features[f];
      if (enc.log1p_mask[f]) {
        if (v <= -1.0) {
          throw DataError("log1p column '" + feature_names[f] + "' has value " +
                          std::to_string(v) + " <= -1 (row " + std::to_string(rec.row_index) +
                          ")");
        }
        v = std::log1p(v);
      }
      enc.min[f] = std::min(enc.min[f], v);
      enc.max[f] = std::max(enc.max[f], v);
    }
  }
  enc.fitted = true;
  return enc;
}

void FeatureEncoder::transform_rows(Matrix& rows) const {
  if (!fitted) throw NotFitted("feature encoder used before fit");
  if (static_cast<std::size_t>(rows.cols()) != arity()) {
    throw ArityMismatch(arity(), static_cast<std::size_t>(rows.cols()));
  }
  for (Eigen::Index f = 0; f < rows.cols(); ++f) {
    const auto fi = static_cast<std::size_t>(f);
    const double lo = min[fi];
    const double span = max[fi] - lo;
    for (Eigen::Index r = 0; r < rows.rows(); ++r) {
      double v = rows(r, f);
      if (log1p_mask[fi]) v = v > -1.0 ? std::log1p(v) : lo;
      rows(r, f) = span > 0.0 ? std::clamp((v - lo) / span, 0.0, 1.0) : 0.0;
    }
  }
}

Matrix raw_feature_matrix(std::span<const FlowRecord> records) {
  if (records.empty()) return Matrix(0, 0);
  const auto n = static_cast<Eigen::Index>(records.front().features.size());
  Matrix m(static_cast<Eigen::Index>(records.size()), n);
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (static_cast<Eigen::Index>(records[r].features.size()) != n) {
      throw ArityMismatch(static_cast<std::size_t>(n), records[r].features.size());
    }
    for (Eigen::Index f = 0; f < n; ++f) {
      m(static_cast<Eigen::Index>(r), f) = records[r].features[static_cast<std::size_t>(f)];
    }
  }
  return m;
}

Matrix FeatureEncoder::transform(std::span<const FlowRecord> records) const {
  if (!fitted) throw NotFitted("feature encoder used before fit");
  for (const auto& rec : records) {
    if (rec.features.size() != arity()) throw ArityMismatch(arity(), rec.features.size());
  }
  Matrix m = raw_feature_matrix(records);
  if (records.empty()) m.resize(0, static_cast<Eigen::Index>(arity()));
  transform_rows(m);
  return m;
}

// ---------------------------------------------------------------- windows

std::vector<SequenceWindow> build_windows(const Matrix& features,
                                          std::span<const std::uint8_t> labels, int window,
                                          int stride, std::span<const std::size_t> row_index) {
  if (window < 1) throw InvalidConfig("window length must be >= 1");
  if (stride < 1) throw InvalidConfig("stride must be >= 1");
  const auto rows = static_cast<std::size_t>(features.rows());
  if (labels.size() != rows) throw LengthMismatch(labels.size(), rows);
  if (!row_index.empty() && row_index.size() != rows) throw LengthMismatch(row_index.size(), rows);
  if (rows < static_cast<std::size_t>(window)) throw TooFewRecords(rows, window);

  const std::size_t count = (rows - window) / stride + 1;
  std::vector<SequenceWindow> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t start = k * stride;
    const std::size_t last = start + window - 1;
    SequenceWindow w;
    w.x = features.middleRows(static_cast<Eigen::Index>(start), window);
    w.label = labels[last];
    w.origin_index = row_index.empty() ? last : row_index[last];
    out.push_back(std::move(w));
  }
  return out;
}

// ---------------------------------------------------------------- splits

void SplitRatios::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0)) throw BadRatios("split ratios must be positive");
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw BadRatios("split ratios must sum to 1 (got " + std::to_string(train + val + test) + ")");
  }
}

DatasetSplits stratified_split(std::vector<SequenceWindow> windows, const SplitRatios& ratios,
                               std::uint64_t seed) {
  ratios.validate();
  if (windows.empty()) throw EmptyInput("no windows to split");

  DatasetSplits out;
  out.seed = seed;
  out.ratios = ratios;

  std::mt19937_64 rng(seed);
  for (std::uint8_t cls : {std::uint8_t{0}, std::uint8_t{1}}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      if (windows[i].label == cls) members.push_back(i);
    }
    std::shuffle(members.begin(), members.end(), rng);
    const auto take = apportion(members.size(), ratios);
    std::size_t pos = 0;
    for (int s = 0; s < 3; ++s) {
      auto& dest = s == 0 ? out.train : s == 1 ? out.val : out.test;
      for (std::size_t j = 0; j < take[s]; ++j) dest.push_back(std::move(windows[members[pos++]]));
    }
  }
  sort_by_origin(out.train);
  sort_by_origin(out.val);
  sort_by_origin(out.test);
  return out;
}

DatasetSplits block_split(std::vector<SequenceWindow> windows, const SplitRatios& ratios,
                          int window, int stride) {
  ratios.validate();
  if (windows.empty()) throw EmptyInput("no windows to split");
  if (window < 1 || stride < 1) throw InvalidConfig("window and stride must be >= 1");
  sort_by_origin(windows);

  DatasetSplits out;
  out.ratios = ratios;
  const auto take = apportion(windows.size(), ratios);
  // window k covers stream positions [k*stride, k*stride + window - 1]
  std::size_t k = 0;
  long last_covered = -1;
  for (int s = 0; s < 3; ++s) {
    auto& dest = s == 0 ? out.train : s == 1 ? out.val : out.test;
    long block_last = last_covered;
    for (std::size_t j = 0; j < take[s]; ++j, ++k) {
      const long first = static_cast<long>(k) * stride;
      if (first <= last_covered) continue;
      block_last = first + window - 1;
      dest.push_back(std::move(windows[k]));
    }
    last_covered = block_last;
  }
  return out;
}

// ---------------------------------------------------------------- pipeline

void PreprocessConfig::validate() const {
  if (window < 1) throw InvalidConfig("window must be >= 1");
  if (stride < 1) throw InvalidConfig("stride must be >= 1");
  try {
    ratios.validate();
  } catch (const BadRatios& e) {
    throw InvalidConfig(e.what());
  }
}

PreparedData prepare_dataset(const RawDataset& dataset, const PreprocessConfig& config) {
  config.validate();
  if (dataset.records.empty()) throw EmptyDataset("dataset has no records");
  const auto& records = dataset.records;

  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> row_index;
  labels.reserve(records.size());
  row_index.reserve(records.size());
  for (const auto& rec : records) {
    labels.push_back(rec.label);
    row_index.push_back(rec.row_index);
  }
  auto windows = build_windows(raw_feature_matrix(records), labels, config.window, config.stride,
                               row_index);

  PreparedData out;
  out.splits = config.split_mode == SplitMode::stratified
                   ? stratified_split(std::move(windows), config.ratios, config.seed)
                   : block_split(std::move(windows), config.ratios, config.window, config.stride);
  out.splits.seed = config.seed;

  // the encoder only ever sees rows that belong to a training window
  std::vector<bool> in_train(records.size(), false);
  for (const auto& w : out.splits.train) {
    auto it = std::lower_bound(row_index.begin(), row_index.end(), w.origin_index);
    const auto last = static_cast<std::size_t>(it - row_index.begin());
    for (std::size_t p = last + 1 - static_cast<std::size_t>(config.window); p <= last; ++p) {
      in_train[p] = true;
    }
  }
  std::vector<FlowRecord> train_rows;
  for (std::size_t p = 0; p < records.size(); ++p) {
    if (in_train[p]) train_rows.push_back(records[p]);
  }
  out.encoder = fit_encoder(train_rows, dataset.schema.effective_features(), config.log1p_columns);

  for (auto* split : {&out.splits.train, &out.splits.val, &out.splits.test}) {
    for (auto& w : *split) out.encoder.transform_rows(w.x);
  }
  return out;
}

std::vector<SequenceWindow> encode_windows(const RawDataset& dataset,
                                           const FeatureEncoder& encoder, int window, int stride) {
  if (dataset.feature_count() != encoder.arity()) {
    throw ArityMismatch(encoder.arity(), dataset.feature_count());
  }
  const Matrix features = encoder.transform(dataset.records);
  std::vector<std::uint8_t> labels;
  std::vector<std::size_t> row_index;
  for (const auto& rec : dataset.records) {
    labels.push_back(rec.label);
    row_index.push_back(rec.row_index);
  }
  return build_windows(features, labels, window, stride, row_index);
}

}  // namespace nids
