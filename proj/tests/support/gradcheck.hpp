// SPDX-License-Identifier: Apache-2.0
// Finite-difference gradient checks shared by the unit and acceptance tests.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "nids/nn/tensor.hpp"

namespace nids::testing {

inline constexpr double kFdStep = 1e-5;

// |a - n| / max(|a|, |n|, 1e-6); the floor keeps entries whose true
// gradient is ~0 from dividing round-off by round-off.
double relative_error(double analytic, double numeric);

struct GradStats {
  std::string layer;
  std::size_t instances = 0;
  std::size_t entries = 0;  // individual partial derivatives compared
  double max_rel_error = 0.0;

  void add(double analytic, double numeric);
};

// Each check draws `instances` random small problems, contracts the layer
// output with a random cotangent to get a scalar loss, and compares every
// analytic partial (inputs and parameters) with a central difference.
GradStats check_conv1d(std::size_t instances, std::uint64_t seed);
GradStats check_maxpool1d(std::size_t instances, std::uint64_t seed);
GradStats check_dense(std::size_t instances, std::uint64_t seed);
GradStats check_lstm_cell(std::size_t instances, std::uint64_t seed);
GradStats check_bilstm(std::size_t instances, std::uint64_t seed);
GradStats check_weighted_bce(std::size_t instances, std::uint64_t seed);

// Whole model, T=6, n=3, filters 2/2, H=2, eval mode (no dropout), loss =
// weighted BCE of the single score; partials w.r.t. every parameter.
GradStats check_model(std::size_t instances, std::uint64_t seed);

nn::Matrix random_matrix(long rows, long cols, nn::Rng& rng, double scale = 1.0);
nn::Vector random_vector(long size, nn::Rng& rng, double scale = 1.0);

}  // namespace nids::testing
