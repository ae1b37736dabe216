// SPDX-License-Identifier: Apache-2.0
#include "nids/flow_ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "json.hpp"

#include "nids/error.hpp"

namespace nids {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_real(std::string_view text) {
  text = trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
    return std::nullopt;
  }
  return value;
}

bool is_blank(const std::string& line) {
  return std::all_of(line.begin(), line.end(),
                     [](char c) { return c == ' ' || c == '\t' || c == '\r'; });
}

}  // namespace

FlowSchema FlowSchema::nf_bot_iot() {
  FlowSchema schema;
  schema.feature_columns = {"IPV4_SRC_ADDR", "L4_SRC_PORT", "IPV4_DST_ADDR", "L4_DST_PORT",
                            "PROTOCOL",      "L7_PROTO",    "IN_BYTES",      "OUT_BYTES",
                            "IN_PKTS",       "OUT_PKTS",    "TCP_FLAGS",
                            "FLOW_DURATION_MILLISECONDS"};
  schema.label_column = "Label";
  schema.attack_column = "Attack";
  schema.drop_columns = {"IPV4_SRC_ADDR", "IPV4_DST_ADDR"};
  return schema;
}

std::vector<std::string> FlowSchema::effective_features() const {
  std::vector<std::string> out;
  for (const auto& name : feature_columns) {
    if (std::find(drop_columns.begin(), drop_columns.end(), name) == drop_columns.end()) {
      out.push_back(name);
    }
  }
  return out;
}

void FlowSchema::validate() const {
  if (effective_features().empty()) throw InvalidConfig("schema has no feature columns");
  if (label_column.empty()) throw InvalidConfig("schema has no label column");
  std::set<std::string> seen;
  for (const auto& name : feature_columns) {
    if (!seen.insert(name).second) throw InvalidConfig("duplicate feature column '" + name + "'");
    if (name == label_column || (attack_column && name == *attack_column)) {
      throw InvalidConfig("column '" + name + "' is both a feature and the label/attack column");
    }
  }
  if (attack_column && *attack_column == label_column) {
    throw InvalidConfig("label and attack column are the same");
  }
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c != '\r' || i + 1 != line.size()) {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

RawDataset parse_netflow_csv(const std::filesystem::path& path, const FlowSchema& schema,
                             const ParseOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open data file '" + path.string() + "'");
  return parse_netflow_csv(in, schema, options, path.string());
}

RawDataset parse_netflow_csv(std::istream& input, const FlowSchema& schema,
                             const ParseOptions& options, const std::string& source_name) {
  schema.validate();

  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(input, line)) {
    ++line_no;
    if (!is_blank(line)) {
      have_header = true;
      break;
    }
  }
  if (!have_header) throw EmptyFile("data file '" + source_name + "' is empty");

  std::unordered_map<std::string, std::size_t> column_of;
  const auto header = split_csv_line(line);
  for (std::size_t i = 0; i < header.size(); ++i) {
    column_of.emplace(std::string(trim(header[i])), i);
  }
  auto locate = [&](const std::string& name) -> std::optional<std::size_t> {
    auto it = column_of.find(name);
    if (it == column_of.end()) return std::nullopt;
    return it->second;
  };

  RawDataset ds;
  ds.schema = schema;
  ds.source_path = source_name;

  const auto features = schema.effective_features();
  std::vector<std::size_t> feature_idx;
  for (const auto& name : features) {
    auto idx = locate(name);
    if (!idx) throw MissingColumn(name);
    feature_idx.push_back(*idx);
  }
  auto label_idx = locate(schema.label_column);
  if (!label_idx) {
    if (options.require_label) throw MissingColumn(schema.label_column);
    ds.labeled = false;
  }
  std::optional<std::size_t> attack_idx;
  if (schema.attack_column) {
    attack_idx = locate(*schema.attack_column);
    if (!attack_idx && options.require_label) throw MissingColumn(*schema.attack_column);
  }

  std::size_t data_rows = 0;
  while (std::getline(input, line)) {
    ++line_no;
    if (is_blank(line)) continue;
    const std::size_t row_index = data_rows++;
    try {
      const auto fields = split_csv_line(line);
      if (fields.size() != header.size()) {
        throw MalformedRow(line_no, "expected " + std::to_string(header.size()) +
                                        " fields, found " + std::to_string(fields.size()));
      }
      FlowRecord rec;
      rec.row_index = row_index;
      rec.features.reserve(feature_idx.size());
      for (std::size_t f = 0; f < feature_idx.size(); ++f) {
        auto value = parse_real(fields[feature_idx[f]]);
        if (!value) {
          throw MalformedRow(line_no, "non-numeric value '" + fields[feature_idx[f]] +
                                          "' in column '" + features[f] + "'");
        }
        rec.features.push_back(*value);
      }
      if (label_idx) {
        auto label = parse_real(fields[*label_idx]);
        if (!label || (*label != 0.0 && *label != 1.0)) {
          throw InvalidLabel(line_no, fields[*label_idx]);
        }
        rec.label = static_cast<std::uint8_t>(*label);
      }
      if (attack_idx) rec.attack = std::string(trim(fields[*attack_idx]));
      ds.records.push_back(std::move(rec));
    } catch (const DataError&) {
      if (options.strict) throw;
      ++ds.rejected_rows;
    }
  }
  if (data_rows == 0) throw EmptyFile("data file '" + source_name + "' has no data rows");
  return ds;
}

std::string LabelSummary::to_json() const {
  nlohmann::ordered_json j;
  j["total"] = total;
  j["benign"] = benign;
  j["malicious"] = malicious;
  j["benign_frac"] = benign_fraction;
  return j.dump();
}

LabelSummary summarize_labels(const RawDataset& dataset) {
  if (dataset.records.empty()) throw EmptyDataset("cannot summarize an empty dataset");
  LabelSummary s;
  s.total = dataset.records.size();
  for (const auto& rec : dataset.records) {
    if (rec.label == 1) ++s.malicious;
  }
  s.benign = s.total - s.malicious;
  s.benign_fraction = static_cast<double>(s.benign) / static_cast<double>(s.total);
  s.malicious_fraction = static_cast<double>(s.malicious) / static_cast<double>(s.total);
  return s;
}

RawDataset stratified_subsample(const RawDataset& dataset, std::size_t count, std::uint64_t seed) {
  if (dataset.records.empty()) throw EmptyDataset("cannot subsample an empty dataset");
  if (count >= dataset.records.size()) return dataset;

  std::vector<std::size_t> by_class[2];
  for (std::size_t i = 0; i < dataset.records.size(); ++i) {
    by_class[dataset.records[i].label].push_back(i);
  }
  const double total = static_cast<double>(dataset.records.size());
  double quota[2];
  std::size_t take[2];
  for (int c = 0; c < 2; ++c) {
    quota[c] = static_cast<double>(count) * static_cast<double>(by_class[c].size()) / total;
    take[c] = static_cast<std::size_t>(std::floor(quota[c] + 1e-9));
  }
  if (take[0] + take[1] < count) {
    // one unit of remainder left over with two classes; ties go to class 0
    const double r0 = quota[0] - static_cast<double>(take[0]);
    const double r1 = quota[1] - static_cast<double>(take[1]);
    ++take[r1 > r0 ? 1 : 0];
  }

  std::mt19937_64 rng(seed);
  std::vector<std::size_t> chosen;
  for (int c = 0; c < 2; ++c) {
    auto& pool = by_class[c];
    std::shuffle(pool.begin(), pool.end(), rng);
    chosen.insert(chosen.end(), pool.begin(),
                  pool.begin() + static_cast<std::ptrdiff_t>(std::min(take[c], pool.size())));
  }
  std::sort(chosen.begin(), chosen.end());

  RawDataset out;
  out.schema = dataset.schema;
  out.source_path = dataset.source_path;
  out.labeled = dataset.labeled;
  out.records.reserve(chosen.size());
  for (auto i : chosen) out.records.push_back(dataset.records[i]);
  return out;
}

}  // namespace nids
