// SPDX-License-Identifier: Apache-2.0
#include "nids/nn/lstm.hpp"

#include <string>

#include "nids/error.hpp"
#include "nids/nn/layers.hpp"

namespace nids::nn {

LstmCellParams LstmCellParams::zeros(int input_size, int hidden_size) {
  if (input_size < 1 || hidden_size < 1) throw ShapeMismatch("lstm needs D, H >= 1");
  LstmCellParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.w_input = Matrix::Zero(input_size, 4 * hidden_size);
  p.w_recurrent = Matrix::Zero(hidden_size, 4 * hidden_size);
  p.bias = Vector::Zero(4 * hidden_size);
  return p;
}

BiLstmParams BiLstmParams::zeros(int input_size, int hidden_size) {
  return BiLstmParams{LstmCellParams::zeros(input_size, hidden_size),
                      LstmCellParams::zeros(input_size, hidden_size)};
}

LstmStep lstm_cell_step(const Vector& x, const Vector& h_prev, const Vector& c_prev,
                        const LstmCellParams& params) {
  const int hid = params.hidden_size;
  if (x.size() != params.input_size || h_prev.size() != hid || c_prev.size() != hid ||
      params.w_input.rows() != params.input_size || params.w_input.cols() != 4 * hid ||
      params.w_recurrent.rows() != hid || params.w_recurrent.cols() != 4 * hid ||
      params.bias.size() != 4 * hid) {
    throw ShapeMismatch("lstm step: dimensions inconsistent with (D=" +
                        std::to_string(params.input_size) + ", H=" + std::to_string(hid) + ")");
  }
  Vector z = params.w_input.transpose() * x;
  z.noalias() += params.w_recurrent.transpose() * h_prev;
  z += params.bias;

  LstmStep s;
  s.x = x;
  s.h_prev = h_prev;
  s.c_prev = c_prev;
  s.i = logistic(Vector(z.segment(0, hid)));
  s.f = logistic(Vector(z.segment(hid, hid)));
  s.g = z.segment(2 * hid, hid).array().tanh().matrix();
  s.o = logistic(Vector(z.segment(3 * hid, hid)));
  s.c = s.f.cwiseProduct(c_prev) + s.i.cwiseProduct(s.g);
  s.tanh_c = s.c.array().tanh().matrix();
  s.h = s.o.cwiseProduct(s.tanh_c);
  return s;
}

LstmStepGrad lstm_cell_backward(const LstmStep& step, const Vector& d_h, const Vector& d_c,
                                const LstmCellParams& params, LstmCellParams& grad) {
  const int hid = params.hidden_size;
  if (d_h.size() != hid || d_c.size() != hid) throw ShapeMismatch("lstm backward: bad gradient");

  const auto one = Eigen::ArrayXd::Ones(hid);
  const Eigen::ArrayXd d_c_total =
      d_c.array() + d_h.array() * step.o.array() * (one - step.tanh_c.array().square());

  Vector dz(4 * hid);
  dz.segment(0, hid) = (d_c_total * step.g.array() * step.i.array() * (one - step.i.array())).matrix();
  dz.segment(hid, hid) =
      (d_c_total * step.c_prev.array() * step.f.array() * (one - step.f.array())).matrix();
  dz.segment(2 * hid, hid) = (d_c_total * step.i.array() * (one - step.g.array().square())).matrix();
  dz.segment(3 * hid, hid) =
      (d_h.array() * step.tanh_c.array() * step.o.array() * (one - step.o.array())).matrix();

  grad.w_input.noalias() += step.x * dz.transpose();
  grad.w_recurrent.noalias() += step.h_prev * dz.transpose();
  grad.bias += dz;

  LstmStepGrad out;
  out.d_x = params.w_input * dz;
  out.d_h_prev = params.w_recurrent * dz;
  out.d_c_prev = (d_c_total * step.f.array()).matrix();
  return out;
}

Vector bilstm_forward(const Matrix& sequence, const BiLstmParams& params, BiLstmTrace* trace) {
  const Eigen::Index steps = sequence.rows();
  if (steps < 1) throw EmptySequence("bilstm input has no time steps");
  if (params.forward.input_size != params.backward.input_size ||
      params.forward.hidden_size != params.backward.hidden_size) {
    throw ShapeMismatch("bilstm directions disagree on (D, H)");
  }
  if (sequence.cols() != params.forward.input_size) {
    throw ShapeMismatch("bilstm input has " + std::to_string(sequence.cols()) +
                        " features, expected " + std::to_string(params.forward.input_size));
  }
  const int hid = params.hidden_size();
  if (trace) {
    trace->forward.clear();
    trace->backward.clear();
    trace->forward.reserve(static_cast<std::size_t>(steps));
    trace->backward.reserve(static_cast<std::size_t>(steps));
  }

  Vector h = Vector::Zero(hid);
  Vector c = Vector::Zero(hid);
  for (Eigen::Index t = 0; t < steps; ++t) {
    LstmStep s = lstm_cell_step(sequence.row(t).transpose(), h, c, params.forward);
    h = s.h;
    c = s.c;
    if (trace) trace->forward.push_back(std::move(s));
  }
  Vector context(2 * hid);
  context.head(hid) = h;

  h.setZero();
  c.setZero();
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    LstmStep s = lstm_cell_step(sequence.row(t).transpose(), h, c, params.backward);
    h = s.h;
    c = s.c;
    if (trace) trace->backward.push_back(std::move(s));
  }
  context.tail(hid) = h;
  return context;
}

Matrix bilstm_backward(const BiLstmTrace& trace, const Vector& d_context,
                       const BiLstmParams& params, BiLstmParams& grad) {
  const int hid = params.hidden_size();
  const auto steps = static_cast<Eigen::Index>(trace.forward.size());
  if (steps < 1 || trace.backward.size() != trace.forward.size()) {
    throw EmptySequence("bilstm backward needs a forward trace");
  }
  if (d_context.size() != 2 * hid) throw ShapeMismatch("bilstm backward: bad context gradient");

  Matrix d_sequence = Matrix::Zero(steps, params.forward.input_size);

  Vector d_h = d_context.head(hid);
  Vector d_c = Vector::Zero(hid);
  for (Eigen::Index t = steps - 1; t >= 0; --t) {
    auto g = lstm_cell_backward(trace.forward[static_cast<std::size_t>(t)], d_h, d_c,
                                params.forward, grad.forward);
    d_sequence.row(t) += g.d_x.transpose();
    d_h = std::move(g.d_h_prev);
    d_c = std::move(g.d_c_prev);
  }

  d_h = d_context.tail(hid);
  d_c.setZero();
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    auto g = lstm_cell_backward(trace.backward[static_cast<std::size_t>(s)], d_h, d_c,
                                params.backward, grad.backward);
    d_sequence.row(steps - 1 - s) += g.d_x.transpose();
    d_h = std::move(g.d_h_prev);
    d_c = std::move(g.d_c_prev);
  }
  return d_sequence;
}

}  // namespace nids::nn
