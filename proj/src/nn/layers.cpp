// SPDX-License-Identifier: Apache-2.0
#include "nids/nn/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "nids/error.hpp"

namespace nids::nn {

void glorot_uniform(std::span<double> values, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : values) v = dist(rng);
}

std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// ---------------------------------------------------------------- conv1d

Conv1DParams Conv1DParams::zeros(int kernel_size, int in_channels, int out_channels,
                                 Padding padding) {
  if (kernel_size < 1 || in_channels < 1 || out_channels < 1) {
    throw ShapeMismatch("conv1d needs k, C_in, C_out >= 1");
  }
  Conv1DParams p;
  p.kernel_size = kernel_size;
  p.in_channels = in_channels;
  p.out_channels = out_channels;
  p.padding = padding;
  p.kernel = Matrix::Zero(kernel_size * in_channels, out_channels);
  p.bias = Vector::Zero(out_channels);
  return p;
}

int Conv1DParams::output_length(int input_length) const {
  return padding == Padding::same ? input_length : input_length - kernel_size + 1;
}

namespace {

int left_pad(const Conv1DParams& p) {
  return p.padding == Padding::same ? (p.kernel_size - 1) / 2 : 0;
}

void check_conv_shapes(const Matrix& input, const Conv1DParams& p) {
  if (p.kernel.rows() != p.kernel_size * p.in_channels || p.kernel.cols() != p.out_channels ||
      p.bias.size() != p.out_channels) {
    throw ShapeMismatch("conv1d parameters inconsistent with (k, C_in, C_out)");
  }
  if (input.cols() != p.in_channels) {
    throw ShapeMismatch("conv1d input has " + std::to_string(input.cols()) +
                        " channels, expected " + std::to_string(p.in_channels));
  }
  if (input.rows() < 1 || (p.padding == Padding::valid && input.rows() < p.kernel_size)) {
    throw InputTooShort("conv1d input length " + std::to_string(input.rows()) +
                        " too short for kernel size " + std::to_string(p.kernel_size));
  }
}

// Row i holds the k input rows feeding output position i, zeros where the
// tap falls into padding.
Matrix im2col(const Matrix& input, const Conv1DParams& p) {
  const int length = static_cast<int>(input.rows());
  const int out_len = p.output_length(length);
  const int pad = left_pad(p);
  const int cin = p.in_channels;
  Matrix cols = Matrix::Zero(out_len, p.kernel_size * cin);
  for (int i = 0; i < out_len; ++i) {
    for (int j = 0; j < p.kernel_size; ++j) {
      const int src = i + j - pad;
      if (src >= 0 && src < length) cols.block(i, j * cin, 1, cin) = input.row(src);
    }
  }
  return cols;
}

}  // namespace

Matrix conv1d(const Matrix& input, const Conv1DParams& params) {
  check_conv_shapes(input, params);
  Matrix out = im2col(input, params) * params.kernel;
  out.rowwise() += params.bias.transpose();
  return out;
}

Matrix conv1d_backward(const Matrix& input, const Conv1DParams& params, const Matrix& d_output,
                       Conv1DParams& grad) {
  check_conv_shapes(input, params);
  const int length = static_cast<int>(input.rows());
  const int out_len = params.output_length(length);
  if (d_output.rows() != out_len || d_output.cols() != params.out_channels) {
    throw ShapeMismatch("conv1d upstream gradient shape mismatch");
  }
  const Matrix cols = im2col(input, params);
  grad.kernel.noalias() += cols.transpose() * d_output;
  grad.bias.noalias() += d_output.colwise().sum().transpose();

  const Matrix d_cols = d_output * params.kernel.transpose();
  const int pad = left_pad(params);
  const int cin = params.in_channels;
  Matrix d_input = Matrix::Zero(length, cin);
  for (int i = 0; i < out_len; ++i) {
    for (int j = 0; j < params.kernel_size; ++j) {
      const int src = i + j - pad;
      if (src >= 0 && src < length) d_input.row(src) += d_cols.block(i, j * cin, 1, cin);
    }
  }
  return d_input;
}

// ---------------------------------------------------------------- pooling

PoolResult maxpool1d(const Matrix& input, int width) {
  if (width < 1) throw ShapeMismatch("pool width must be >= 1");
  if (input.rows() < width) {
    throw InputTooShort("maxpool input length " + std::to_string(input.rows()) +
                        " shorter than width " + std::to_string(width));
  }
  const int out_len = static_cast<int>(input.rows()) / width;
  const int channels = static_cast<int>(input.cols());
  PoolResult r;
  r.output.resize(out_len, channels);
  r.argmax.resize(static_cast<std::size_t>(out_len) * channels);
  for (int i = 0; i < out_len; ++i) {
    for (int c = 0; c < channels; ++c) {
      int best = i * width;
      for (int s = best + 1; s < (i + 1) * width; ++s) {
        if (input(s, c) > input(best, c)) best = s;
      }
      r.output(i, c) = input(best, c);
      r.argmax[static_cast<std::size_t>(i) * channels + c] = best;
    }
  }
  return r;
}

Matrix maxpool1d_backward(const PoolResult& forward, int input_length, const Matrix& d_output) {
  const auto& out = forward.output;
  if (d_output.rows() != out.rows() || d_output.cols() != out.cols()) {
    throw ShapeMismatch("maxpool upstream gradient shape mismatch");
  }
  const int channels = static_cast<int>(out.cols());
  Matrix d_input = Matrix::Zero(input_length, channels);
  for (int i = 0; i < out.rows(); ++i) {
    for (int c = 0; c < channels; ++c) {
      d_input(forward.argmax[static_cast<std::size_t>(i) * channels + c], c) += d_output(i, c);
    }
  }
  return d_input;
}

// ---------------------------------------------------------------- dropout

DropoutResult dropout(const Matrix& input, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw BadRate(rate);
  DropoutResult r;
  if (mode == Mode::eval) {
    r.output = input;
    r.mask = Matrix::Ones(input.rows(), input.cols());
    return r;
  }
  const double scale = 1.0 / (1.0 - rate);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  r.mask.resize(input.rows(), input.cols());
  for (Eigen::Index i = 0; i < r.mask.size(); ++i) {
    r.mask.data()[i] = uniform(rng) < rate ? 0.0 : scale;
  }
  r.output = input.cwiseProduct(r.mask);
  return r;
}

Matrix dropout_backward(const Matrix& d_output, const Matrix& mask) {
  if (d_output.rows() != mask.rows() || d_output.cols() != mask.cols()) {
    throw ShapeMismatch("dropout upstream gradient shape mismatch");
  }
  return d_output.cwiseProduct(mask);
}

// ---------------------------------------------------------------- dense

DenseParams DenseParams::zeros(int in, int out) {
  if (in < 1 || out < 1) throw ShapeMismatch("dense layer needs in, out >= 1");
  return DenseParams{Matrix::Zero(in, out), Vector::Zero(out)};
}

Vector dense(const Vector& input, const DenseParams& params) {
  if (input.size() != params.weight.rows() || params.bias.size() != params.weight.cols()) {
    throw ShapeMismatch("dense input length " + std::to_string(input.size()) + ", expected " +
                        std::to_string(params.weight.rows()));
  }
  Vector out = params.weight.transpose() * input;
  out += params.bias;
  return out;
}

Vector dense_backward(const Vector& input, const DenseParams& params, const Vector& d_output,
                      DenseParams& grad) {
  if (input.size() != params.weight.rows() || d_output.size() != params.weight.cols()) {
    throw ShapeMismatch("dense backward shape mismatch");
  }
  grad.weight.noalias() += input * d_output.transpose();
  grad.bias += d_output;
  return params.weight * d_output;
}

// ---------------------------------------------------------------- activations

double relu(double x) { return x > 0.0 ? x : 0.0; }
double relu_grad(double x) { return x > 0.0 ? 1.0 : 0.0; }

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& pre_activation, const Matrix& d_output) {
  return (pre_activation.array() > 0.0).select(d_output.array(), 0.0).matrix();
}

double logistic(double x) {
  // clamped so the result stays strictly inside (0, 1) even when exp()
  // underflows or 1 + e^-x rounds to 1
  constexpr double lo = std::numeric_limits<double>::min();
  constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2;
  double s;
  if (x >= 0.0) {
    s = 1.0 / (1.0 + std::exp(-x));
  } else {
    const double e = std::exp(x);
    s = e / (1.0 + e);
  }
  return std::clamp(s, lo, hi);
}

double logistic_grad(double x) {
  const double s = logistic(x);
  return s * (1.0 - s);
}

Vector logistic(const Vector& x) { return x.unaryExpr([](double v) { return logistic(v); }); }

}  // namespace nids::nn
