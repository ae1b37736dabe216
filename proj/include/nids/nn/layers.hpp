// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <concepts>
#include <cstddef>
#include <vector>

#include "nids/nn/tensor.hpp"

namespace nids::nn {

enum class Padding { same, valid };

// 1-D convolution along time, stride 1.
//   y[i] = sum_j x[i + j - pad_left] * W[j] + b
// `kernel` stores W as [k * C_in x C_out]: row j * C_in + c holds the weights
// from input channel c at tap j, i.e. a row-major [k x C_in x C_out] array.
struct Conv1DParams {
  int kernel_size = 1;
  int in_channels = 1;
  int out_channels = 1;
  Padding padding = Padding::same;
  Matrix kernel;
  Vector bias;

  static Conv1DParams zeros(int kernel_size, int in_channels, int out_channels,
                            Padding padding = Padding::same);
  int output_length(int input_length) const;
};

template <class P, class Fn>
  requires std::same_as<std::remove_const_t<P>, Conv1DParams>
void visit_params(P& p, std::string_view prefix, Fn&& fn) {
  const auto k = static_cast<std::size_t>(p.kernel_size);
  const auto cin = static_cast<std::size_t>(p.in_channels);
  const auto cout = static_cast<std::size_t>(p.out_channels);
  fn(join_name(prefix, "kernel"), std::vector<std::size_t>{k, cin, cout}, values_of(p.kernel));
  fn(join_name(prefix, "bias"), std::vector<std::size_t>{cout}, values_of(p.bias));
}

Matrix conv1d(const Matrix& input, const Conv1DParams& params);

// Accumulates dLoss/dkernel and dLoss/dbias into `grad` and returns
// dLoss/dinput.
Matrix conv1d_backward(const Matrix& input, const Conv1DParams& params, const Matrix& d_output,
                       Conv1DParams& grad);

struct PoolResult {
  Matrix output;
  std::vector<int> argmax;  // source row per output element, row-major like `output`
};

// Non-overlapping max pooling (stride = width). Trailing rows that do not
// fill a full window are dropped; ties pick the earliest row.
PoolResult maxpool1d(const Matrix& input, int width = 2);
Matrix maxpool1d_backward(const PoolResult& forward, int input_length, const Matrix& d_output);

struct DropoutResult {
  Matrix output;
  Matrix mask;  // 0 or 1/(1-p); all ones in eval mode
};

// Inverted dropout. Throws BadRate unless 0 <= rate < 1.
DropoutResult dropout(const Matrix& input, double rate, Mode mode, Rng& rng);
Matrix dropout_backward(const Matrix& d_output, const Matrix& mask);

// Affine map y = x^T W + b with W stored [in x out].
struct DenseParams {
  Matrix weight;
  Vector bias;

  static DenseParams zeros(int in, int out);
  int in_size() const { return static_cast<int>(weight.rows()); }
  int out_size() const { return static_cast<int>(weight.cols()); }
};

template <class P, class Fn>
  requires std::same_as<std::remove_const_t<P>, DenseParams>
void visit_params(P& p, std::string_view prefix, Fn&& fn) {
  const auto in = static_cast<std::size_t>(p.weight.rows());
  const auto out = static_cast<std::size_t>(p.weight.cols());
  fn(join_name(prefix, "weight"), std::vector<std::size_t>{in, out}, values_of(p.weight));
  fn(join_name(prefix, "bias"), std::vector<std::size_t>{out}, values_of(p.bias));
}

Vector dense(const Vector& input, const DenseParams& params);
Vector dense_backward(const Vector& input, const DenseParams& params, const Vector& d_output,
                      DenseParams& grad);

double relu(double x);
double relu_grad(double x);  // 0 at x = 0
Matrix relu(const Matrix& x);
Matrix relu_backward(const Matrix& pre_activation, const Matrix& d_output);

// 1/(1+e^-x), evaluated without overflow for any finite x.
double logistic(double x);
double logistic_grad(double x);
Vector logistic(const Vector& x);

}  // namespace nids::nn
