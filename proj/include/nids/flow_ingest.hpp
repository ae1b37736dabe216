// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace nids {

// Column layout of a NetFlow CSV. Model features are feature_columns minus
// drop_columns, in feature_columns order.
struct FlowSchema {
  std::vector<std::string> feature_columns;
  std::string label_column = "Label";
  std::optional<std::string> attack_column = "Attack";
  std::vector<std::string> drop_columns;

  // NF-BoT-IoT v1 NetFlow layout with the two IPv4 address columns dropped.
  static FlowSchema nf_bot_iot();

  std::vector<std::string> effective_features() const;

  // Throws InvalidConfig on an empty feature set, duplicates, or overlap
  // between features and the label/attack columns.
  void validate() const;
};

struct FlowRecord {
  std::vector<double> features;
  std::uint8_t label = 0;  // 0 = benign, 1 = malicious
  std::optional<std::string> attack;
  std::size_t row_index = 0;  // 0-based data row in the source file
};

struct RawDataset {
  std::vector<FlowRecord> records;
  FlowSchema schema;
  std::string source_path;
  bool labeled = true;
  std::size_t rejected_rows = 0;  // lenient mode only

  std::size_t feature_count() const { return schema.effective_features().size(); }
};

struct ParseOptions {
  bool strict = true;         // abort on the first bad row; lenient mode skips and counts
  bool require_label = true;  // when false a missing label column yields an unlabeled dataset
};

RawDataset parse_netflow_csv(const std::filesystem::path& path, const FlowSchema& schema,
                             const ParseOptions& options = {});
RawDataset parse_netflow_csv(std::istream& input, const FlowSchema& schema,
                             const ParseOptions& options = {},
                             const std::string& source_name = "<stream>");

struct LabelSummary {
  std::size_t total = 0;
  std::size_t benign = 0;
  std::size_t malicious = 0;
  double benign_fraction = 0.0;
  double malicious_fraction = 0.0;

  // {"total": N, "benign": k, "malicious": m, "benign_frac": f}
  std::string to_json() const;
};

LabelSummary summarize_labels(const RawDataset& dataset);

// Draws `count` records keeping the benign/malicious proportions (largest
// remainder) and the original file order.
RawDataset stratified_subsample(const RawDataset& dataset, std::size_t count, std::uint64_t seed);

// Splits one CSV line into fields. Handles double-quoted fields with ""
// escapes; a trailing '\r' is ignored.
std::vector<std::string> split_csv_line(const std::string& line);

}  // namespace nids
