// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace nids::nn {

// Sequences are [length x channels] row-major matrices; row t is time step t.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

using Rng = std::mt19937_64;

enum class Mode { train, eval };

// A named, shaped view of one parameter array. Parameter bundles expose their
// arrays through visit_params(); the optimizer, checkpoints and gradient
// checks all walk the same list in the same order.
template <class T>
struct BasicParamRef {
  std::string name;
  std::vector<std::size_t> shape;
  std::span<T> values;
};
using ParamRef = BasicParamRef<double>;
using ConstParamRef = BasicParamRef<const double>;

inline std::string join_name(std::string_view prefix, std::string_view name) {
  if (prefix.empty()) return std::string(name);
  std::string out(prefix);
  out += '.';
  out += name;
  return out;
}

template <class M>
auto values_of(M& m) {
  return std::span(m.data(), static_cast<std::size_t>(m.size()));
}

// Glorot/Xavier uniform fill in row-major order.
void glorot_uniform(std::span<double> values, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// splitmix64 finalizer; derives independent stream seeds from one seed.
std::uint64_t mix_seed(std::uint64_t x);

}  // namespace nids::nn
