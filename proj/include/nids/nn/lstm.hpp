// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <concepts>
#include <vector>

#include "nids/nn/tensor.hpp"

namespace nids::nn {

// Standard LSTM cell. Gate pre-activations for input x and previous hidden
// state h are
//   z = x^T W_in + h^T W_rec + b,   z = [z_i | z_f | z_g | z_o]  (each H wide)
//   i = sigma(z_i), f = sigma(z_f), g = tanh(z_g), o = sigma(z_o)
//   c' = f * c + i * g,  h' = o * tanh(c')
struct LstmCellParams {
  int input_size = 1;
  int hidden_size = 1;
  Matrix w_input;      // [D x 4H]
  Matrix w_recurrent;  // [H x 4H]
  Vector bias;         // [4H]

  static LstmCellParams zeros(int input_size, int hidden_size);
};

template <class P, class Fn>
  requires std::same_as<std::remove_const_t<P>, LstmCellParams>
void visit_params(P& p, std::string_view prefix, Fn&& fn) {
  const auto d = static_cast<std::size_t>(p.input_size);
  const auto h = static_cast<std::size_t>(p.hidden_size);
  fn(join_name(prefix, "w_input"), std::vector<std::size_t>{d, 4 * h}, values_of(p.w_input));
  fn(join_name(prefix, "w_recurrent"), std::vector<std::size_t>{h, 4 * h},
     values_of(p.w_recurrent));
  fn(join_name(prefix, "bias"), std::vector<std::size_t>{4 * h}, values_of(p.bias));
}

// Everything the backward pass needs from one forward step.
struct LstmStep {
  Vector x, h_prev, c_prev;
  Vector i, f, g, o;
  Vector c, tanh_c, h;
};

LstmStep lstm_cell_step(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                        const LstmCellParams& params);

struct LstmStepGrad {
  Vector d_x, d_h_prev, d_c_prev;
};

// d_h and d_c are the gradients flowing into h' and c' from later use.
// Parameter gradients accumulate into `grad`.
LstmStepGrad lstm_cell_backward(const LstmStep& step, const Vector& d_h, const Vector& d_c,
                                const LstmCellParams& params, LstmCellParams& grad);

struct BiLstmParams {
  LstmCellParams forward;
  LstmCellParams backward;

  static BiLstmParams zeros(int input_size, int hidden_size);
  int hidden_size() const { return forward.hidden_size; }
};

template <class P, class Fn>
  requires std::same_as<std::remove_const_t<P>, BiLstmParams>
void visit_params(P& p, std::string_view prefix, Fn&& fn) {
  visit_params(p.forward, join_name(prefix, "forward"), fn);
  visit_params(p.backward, join_name(prefix, "backward"), fn);
}

struct BiLstmTrace {
  std::vector<LstmStep> forward;   // forward[t] consumed row t
  std::vector<LstmStep> backward;  // backward[s] consumed row T-1-s
};

// Runs the forward cell over rows 0..T-1 and the backward cell over rows
// T-1..0, each from zero state, and returns [h_fwd_final ; h_bwd_final]
// (length 2H). The backward half is the backward cell's state after
// consuming row 0.
Vector bilstm_forward(const Matrix& sequence, const BiLstmParams& params,
                      BiLstmTrace* trace = nullptr);

// Backpropagation through time for both directions; returns dLoss/dsequence.
Matrix bilstm_backward(const BiLstmTrace& trace, const Vector& d_context,
                       const BiLstmParams& params, BiLstmParams& grad);

}  // namespace nids::nn
