// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nids/flow_ingest.hpp"
#include "nids/nn/tensor.hpp"

namespace nids {

using nn::Matrix;

// Per-feature min-max scaling to [0, 1], optionally after log(1 + x).
struct FeatureEncoder {
  std::vector<std::string> feature_names;
  std::vector<double> min;
  std::vector<double> max;
  std::vector<bool> log1p_mask;
  bool fitted = false;

  std::size_t arity() const { return min.size(); }

  // Row-wise; values outside the fitted range clip to [0, 1] and constant
  // features map to 0. Throws NotFitted / ArityMismatch.
  void transform_rows(Matrix& rows) const;
  Matrix transform(std::span<const FlowRecord> records) const;
};

FeatureEncoder fit_encoder(std::span<const FlowRecord> train_records,
                           const std::vector<std::string>& feature_names,
                           const std::vector<std::string>& log1p_columns);

// The default log1p set: byte and packet counters.
std::vector<std::string> default_log1p_columns();

Matrix raw_feature_matrix(std::span<const FlowRecord> records);

struct SequenceWindow {
  Matrix x;  // [T x n], row t = time step t, oldest first
  std::uint8_t label = 0;
  std::size_t origin_index = 0;  // row_index of the window's final record
};

// Windows start at 0, stride, 2*stride, ... and are labeled by their final
// row. `row_index` supplies origin indices (defaults to 0..N-1).
std::vector<SequenceWindow> build_windows(const Matrix& features,
                                          std::span<const std::uint8_t> labels, int window,
                                          int stride,
                                          std::span<const std::size_t> row_index = {});

struct SplitRatios {
  double train = 0.70;
  double val = 0.15;
  double test = 0.15;

  void validate() const;  // throws BadRatios
};

struct DatasetSplits {
  std::vector<SequenceWindow> train;
  std::vector<SequenceWindow> val;
  std::vector<SequenceWindow> test;
  std::uint64_t seed = 0;
  SplitRatios ratios;
};

// Per-class largest-remainder apportionment (ties: train, val, test) with a
// seeded shuffle inside each class. Each split is returned in origin order.
DatasetSplits stratified_split(std::vector<SequenceWindow> windows, const SplitRatios& ratios,
                               std::uint64_t seed);

// Contiguous, leak-free alternative: windows are cut into consecutive blocks
// by origin order and any window sharing a row with an earlier block is
// discarded. `window` and `stride` are the values used to build the windows.
DatasetSplits block_split(std::vector<SequenceWindow> windows, const SplitRatios& ratios,
                          int window, int stride);

enum class SplitMode { stratified, block };

struct PreprocessConfig {
  int window = 10;
  int stride = 1;
  SplitRatios ratios;
  std::vector<std::string> log1p_columns = default_log1p_columns();
  SplitMode split_mode = SplitMode::stratified;
  std::uint64_t seed = 42;

  void validate() const;
};

struct PreparedData {
  FeatureEncoder encoder;
  DatasetSplits splits;
};

// Windows the raw stream, splits the windows, fits the encoder on the rows
// covered by training windows only, then scales every window with it.
PreparedData prepare_dataset(const RawDataset& dataset, const PreprocessConfig& config);

// Scales and windows a whole dataset with an already fitted encoder (the
// evaluation / prediction path).
std::vector<SequenceWindow> encode_windows(const RawDataset& dataset,
                                           const FeatureEncoder& encoder, int window, int stride);

}  // namespace nids
