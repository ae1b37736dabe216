// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "nids/nn/layers.hpp"
#include "nids/nn/lstm.hpp"
#include "nids/preprocess.hpp"

namespace nids {

struct ModelConfig {
  int window = 10;    // T
  int features = 10;  // n
  int conv1_filters = 64;
  int conv2_filters = 128;
  int kernel_size = 3;
  int pool_width = 2;
  double dropout_rate = 0.3;
  int lstm_hidden = 64;
  std::uint64_t seed = 42;

  // Sequence length reaching the BiLSTM after two same-padded conv + pool
  // stages: floor(floor(T / w) / w).
  int lstm_steps() const;
  void validate() const;  // throws InvalidConfig
};

// All trainable arrays. Also used, zero-initialised, as gradient and Adam
// moment buffers.
struct ModelParams {
  nn::Conv1DParams conv1;
  nn::Conv1DParams conv2;
  nn::BiLstmParams bilstm;
  nn::DenseParams head;

  static ModelParams zeros(const ModelConfig& config);
  void set_zero();
  std::size_t size() const;
};

// Block order is the checkpoint order:
//   conv1.kernel [k, n, F1]      conv1.bias [F1]
//   conv2.kernel [k, F1, F2]     conv2.bias [F2]
//   bilstm.forward.w_input [F2, 4H]   .w_recurrent [H, 4H]   .bias [4H]
//   bilstm.backward.w_input [F2, 4H]  .w_recurrent [H, 4H]   .bias [4H]
//   head.weight [2H, 1]          head.bias [1]
// LSTM gate blocks within the 4H axis are ordered i, f, g, o.
template <class P, class Fn>
  requires std::same_as<std::remove_const_t<P>, ModelParams>
void visit_params(P& p, Fn&& fn) {
  nn::visit_params(p.conv1, "conv1", fn);
  nn::visit_params(p.conv2, "conv2", fn);
  nn::visit_params(p.bilstm, "bilstm", fn);
  nn::visit_params(p.head, "head", fn);
}

std::vector<nn::ParamRef> param_blocks(ModelParams& params);
std::vector<nn::ConstParamRef> param_blocks(const ModelParams& params);

// Intermediate values of one window's forward pass.
struct ForwardTrace {
  Matrix input;
  Matrix conv1_pre, conv1_act;
  nn::PoolResult pool1;
  Matrix conv2_pre, conv2_act;
  nn::PoolResult pool2;
  Matrix dropout_mask;
  Matrix lstm_input;
  nn::BiLstmTrace bilstm;
  nn::Vector context;
  double logit = 0.0;
  double score = 0.0;
};

// conv1 -> relu -> maxpool -> conv2 -> relu -> maxpool -> dropout -> BiLSTM
// -> dense(2H -> 1) -> logistic
class CnnBiLstmModel {
 public:
  CnnBiLstmModel(ModelConfig config, ModelParams params);

  const ModelConfig& config() const { return config_; }
  const ModelParams& params() const { return params_; }
  ModelParams& params() { return params_; }

  // Eval-mode score of one [T x n] window, in (0, 1).
  double score(const Matrix& window) const;

  // Forward pass recording intermediates; dropout uses `rng` in train mode.
  double forward(const Matrix& window, nn::Mode mode, nn::Rng& rng, ForwardTrace& trace) const;

  // Backpropagates dLoss/dlogit through a recorded pass, accumulating into
  // `grad`.
  void backward(const ForwardTrace& trace, double d_logit, ModelParams& grad) const;

 private:
  void check_window(const Matrix& window) const;

  ModelConfig config_;
  ModelParams params_;
};

// Glorot-uniform weights, forget-gate biases 1, other biases 0, drawn from a
// generator seeded with config.seed in block order.
CnnBiLstmModel init_model(const ModelConfig& config);

// One eval-mode score per window, in input order. Windows are scored
// independently, so results do not depend on batching or thread count.
std::vector<double> predict_proba(const CnnBiLstmModel& model,
                                  std::span<const SequenceWindow> windows, int threads = 1);

}  // namespace nids
