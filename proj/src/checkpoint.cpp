// SPDX-License-Identifier: Apache-2.0
#include "nids/checkpoint.hpp"

#include <cmath>

#include "json.hpp"

#include "nids/error.hpp"
#include "nids/io.hpp"

namespace nids {

using json = nlohmann::ordered_json;

namespace {

constexpr const char* kFormatName = "nids-cnn-bilstm";

json config_to_json(const ModelConfig& c) {
  json j;
  j["window"] = c.window;
  j["features"] = c.features;
  j["conv1_filters"] = c.conv1_filters;
  j["conv2_filters"] = c.conv2_filters;
  j["kernel_size"] = c.kernel_size;
  j["pool_width"] = c.pool_width;
  j["dropout_rate"] = c.dropout_rate;
  j["lstm_hidden"] = c.lstm_hidden;
  j["seed"] = c.seed;
  return j;
}

ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.window = j.at("window").get<int>();
  c.features = j.at("features").get<int>();
  c.conv1_filters = j.at("conv1_filters").get<int>();
  c.conv2_filters = j.at("conv2_filters").get<int>();
  c.kernel_size = j.at("kernel_size").get<int>();
  c.pool_width = j.at("pool_width").get<int>();
  c.dropout_rate = j.at("dropout_rate").get<double>();
  c.lstm_hidden = j.at("lstm_hidden").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json encoder_to_json(const FeatureEncoder& e) {
  json j;
  j["features"] = e.feature_names;
  j["min"] = e.min;
  j["max"] = e.max;
  j["log1p"] = e.log1p_mask;
  return j;
}

FeatureEncoder encoder_from_json(const json& j) {
  FeatureEncoder e;
  e.feature_names = j.at("features").get<std::vector<std::string>>();
  e.min = j.at("min").get<std::vector<double>>();
  e.max = j.at("max").get<std::vector<double>>();
  e.log1p_mask = j.at("log1p").get<std::vector<bool>>();
  const auto n = e.min.size();
  if (e.max.size() != n || e.log1p_mask.size() != n || e.feature_names.size() != n) {
    throw CorruptCheckpoint("encoder arrays have inconsistent lengths");
  }
  for (std::size_t f = 0; f < n; ++f) {
    if (!(e.min[f] <= e.max[f])) throw CorruptCheckpoint("encoder min > max");
  }
  e.fitted = true;
  return e;
}

}  // namespace

std::string checkpoint_to_json(const Checkpoint& cp) {
  json j;
  j["format"] = kFormatName;
  j["format_version"] = kCheckpointFormatVersion;
  j["config"] = config_to_json(cp.model.config());
  j["encoder"] = encoder_to_json(cp.encoder);
  j["threshold"] = cp.threshold;
  json blocks = json::array();
  for (const auto& block : param_blocks(cp.model.params())) {
    json b;
    b["name"] = block.name;
    b["shape"] = block.shape;
    b["data"] = std::vector<double>(block.values.begin(), block.values.end());
    blocks.push_back(std::move(b));
  }
  j["parameters"] = std::move(blocks);
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (!j.is_object() || j.value("format", "") != kFormatName) {
      throw CorruptCheckpoint("not a nids-cnn-bilstm checkpoint");
    }
    const long version = j.at("format_version").get<long>();
    if (version != kCheckpointFormatVersion) {
      throw VersionMismatch(version, kCheckpointFormatVersion);
    }
    ModelConfig config = config_from_json(j.at("config"));
    try {
      config.validate();
    } catch (const InvalidConfig& e) {
      throw CorruptCheckpoint(e.what());
    }
    FeatureEncoder encoder = encoder_from_json(j.at("encoder"));
    if (encoder.arity() != static_cast<std::size_t>(config.features)) {
      throw CorruptCheckpoint("encoder arity does not match model feature count");
    }
    const double threshold = j.at("threshold").get<double>();
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw CorruptCheckpoint("threshold outside [0, 1]");

    ModelParams params = ModelParams::zeros(config);
    auto blocks = param_blocks(params);
    const auto& stored = j.at("parameters");
    if (!stored.is_array() || stored.size() != blocks.size()) {
      throw CorruptCheckpoint("expected " + std::to_string(blocks.size()) + " parameter blocks");
    }
    for (std::size_t b = 0; b < blocks.size(); ++b) {
      const auto& s = stored[b];
      if (s.at("name").get<std::string>() != blocks[b].name) {
        throw CorruptCheckpoint("parameter block " + std::to_string(b) + " should be '" +
                                blocks[b].name + "'");
      }
      if (s.at("shape").get<std::vector<std::size_t>>() != blocks[b].shape) {
        throw CorruptCheckpoint("shape mismatch for '" + blocks[b].name + "'");
      }
      const auto& data = s.at("data");
      if (!data.is_array() || data.size() != blocks[b].values.size()) {
        throw CorruptCheckpoint("length mismatch for '" + blocks[b].name + "'");
      }
      for (std::size_t i = 0; i < data.size(); ++i) {
        const double v = data[i].get<double>();
        if (!std::isfinite(v)) throw CorruptCheckpoint("non-finite value in '" + blocks[b].name + "'");
        blocks[b].values[i] = v;
      }
    }
    return Checkpoint{CnnBiLstmModel(config, std::move(params)), std::move(encoder), threshold};
  } catch (const json::exception& e) {
    throw CorruptCheckpoint(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
  io::write_file_atomic(path, checkpoint_to_json(checkpoint));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_json(io::read_file(path));
}

}  // namespace nids
