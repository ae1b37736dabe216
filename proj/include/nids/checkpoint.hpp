// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>

#include "nids/model.hpp"
#include "nids/preprocess.hpp"

namespace nids {

inline constexpr long kCheckpointFormatVersion = 1;

struct Checkpoint {
  CnnBiLstmModel model;
  FeatureEncoder encoder;
  double threshold = 0.5;
};

// UTF-8 JSON document:
//   {
//     "format": "nids-cnn-bilstm",
//     "format_version": 1,
//     "config":    {"window":..., "features":..., "conv1_filters":..., ...},
//     "encoder":   {"features": [...], "min": [...], "max": [...], "log1p": [...]},
//     "threshold": tau,
//     "parameters": [{"name": ..., "shape": [...], "data": [...]}, ...]
//   }
// Parameter blocks appear in visit_params order; data is row-major. Doubles
// are written in shortest round-trip form, so load(save(x)) is bit-exact.
std::string checkpoint_to_json(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_json(const std::string& text);

// Throws IoError; writes atomically.
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
// Throws IoError, VersionMismatch, CorruptCheckpoint.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace nids
