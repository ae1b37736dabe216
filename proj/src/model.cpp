// SPDX-License-Identifier: Apache-2.0
#include "nids/model.hpp"

#include <string>

#include "nids/error.hpp"
#include "nids/parallel.hpp"

namespace nids {

int ModelConfig::lstm_steps() const {
  if (pool_width < 1) return 0;
  return (window / pool_width) / pool_width;
}

void ModelConfig::validate() const {
  auto fail = [](const std::string& msg) { throw InvalidConfig("model config: " + msg); };
  if (window < 1) fail("window must be >= 1");
  if (features < 1) fail("feature count must be >= 1");
  if (conv1_filters < 1 || conv2_filters < 1) fail("filter counts must be >= 1");
  if (kernel_size < 1) fail("kernel_size must be >= 1");
  if (pool_width < 1) fail("pool_width must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) fail("dropout_rate must lie in [0, 1)");
  if (lstm_hidden < 1) fail("lstm_hidden must be >= 1");
  if (lstm_steps() < 1) {
    fail("window " + std::to_string(window) + " too short for two pooling stages of width " +
         std::to_string(pool_width));
  }
}

ModelParams ModelParams::zeros(const ModelConfig& c) {
  ModelParams p;
  p.conv1 = nn::Conv1DParams::zeros(c.kernel_size, c.features, c.conv1_filters);
  p.conv2 = nn::Conv1DParams::zeros(c.kernel_size, c.conv1_filters, c.conv2_filters);
  p.bilstm = nn::BiLstmParams::zeros(c.conv2_filters, c.lstm_hidden);
  p.head = nn::DenseParams::zeros(2 * c.lstm_hidden, 1);
  return p;
}

void ModelParams::set_zero() {
  visit_params(*this, [](const std::string&, const auto&, std::span<double> v) {
    std::fill(v.begin(), v.end(), 0.0);
  });
}

std::size_t ModelParams::size() const {
  std::size_t n = 0;
  visit_params(*this, [&](const std::string&, const auto&, std::span<const double> v) {
    n += v.size();
  });
  return n;
}

std::vector<nn::ParamRef> param_blocks(ModelParams& params) {
  std::vector<nn::ParamRef> out;
  visit_params(params, [&](std::string name, std::vector<std::size_t> shape, std::span<double> v) {
    out.push_back({std::move(name), std::move(shape), v});
  });
  return out;
}

std::vector<nn::ConstParamRef> param_blocks(const ModelParams& params) {
  std::vector<nn::ConstParamRef> out;
  visit_params(params,
               [&](std::string name, std::vector<std::size_t> shape, std::span<const double> v) {
                 out.push_back({std::move(name), std::move(shape), v});
               });
  return out;
}

CnnBiLstmModel::CnnBiLstmModel(ModelConfig config, ModelParams params)
    : config_(std::move(config)), params_(std::move(params)) {
  config_.validate();
  const ModelParams expected = ModelParams::zeros(config_);
  const auto want = param_blocks(expected);
  const auto have = param_blocks(std::as_const(params_));
  for (std::size_t b = 0; b < want.size(); ++b) {
    if (want[b].shape != have[b].shape) {
      throw ShapeMismatch("parameter block '" + want[b].name + "' inconsistent with config");
    }
  }
}

void CnnBiLstmModel::check_window(const Matrix& window) const {
  if (window.rows() != config_.window || window.cols() != config_.features) {
    throw ShapeMismatch("window is " + std::to_string(window.rows()) + "x" +
                        std::to_string(window.cols()) + ", model expects " +
                        std::to_string(config_.window) + "x" + std::to_string(config_.features));
  }
}

double CnnBiLstmModel::forward(const Matrix& window, nn::Mode mode, nn::Rng& rng,
                               ForwardTrace& t) const {
  check_window(window);
  t.input = window;
  t.conv1_pre = nn::conv1d(window, params_.conv1);
  t.conv1_act = nn::relu(t.conv1_pre);
  t.pool1 = nn::maxpool1d(t.conv1_act, config_.pool_width);
  t.conv2_pre = nn::conv1d(t.pool1.output, params_.conv2);
  t.conv2_act = nn::relu(t.conv2_pre);
  t.pool2 = nn::maxpool1d(t.conv2_act, config_.pool_width);
  auto dropped = nn::dropout(t.pool2.output, config_.dropout_rate, mode, rng);
  t.dropout_mask = std::move(dropped.mask);
  t.lstm_input = std::move(dropped.output);
  t.context = nn::bilstm_forward(t.lstm_input, params_.bilstm, &t.bilstm);
  t.logit = nn::dense(t.context, params_.head)(0);
  t.score = nn::logistic(t.logit);
  return t.score;
}

double CnnBiLstmModel::score(const Matrix& window) const {
  check_window(window);
  const Matrix a1 = nn::relu(nn::conv1d(window, params_.conv1));
  const Matrix p1 = nn::maxpool1d(a1, config_.pool_width).output;
  const Matrix a2 = nn::relu(nn::conv1d(p1, params_.conv2));
  const Matrix p2 = nn::maxpool1d(a2, config_.pool_width).output;
  const nn::Vector context = nn::bilstm_forward(p2, params_.bilstm);
  return nn::logistic(nn::dense(context, params_.head)(0));
}

void CnnBiLstmModel::backward(const ForwardTrace& t, double d_logit, ModelParams& grad) const {
  nn::Vector d_out(1);
  d_out(0) = d_logit;
  const nn::Vector d_context = nn::dense_backward(t.context, params_.head, d_out, grad.head);
  const Matrix d_lstm_in = nn::bilstm_backward(t.bilstm, d_context, params_.bilstm, grad.bilstm);
  const Matrix d_pool2 = nn::dropout_backward(d_lstm_in, t.dropout_mask);
  const Matrix d_act2 =
      nn::maxpool1d_backward(t.pool2, static_cast<int>(t.conv2_act.rows()), d_pool2);
  const Matrix d_pre2 = nn::relu_backward(t.conv2_pre, d_act2);
  const Matrix d_pool1 = nn::conv1d_backward(t.pool1.output, params_.conv2, d_pre2, grad.conv2);
  const Matrix d_act1 =
      nn::maxpool1d_backward(t.pool1, static_cast<int>(t.conv1_act.rows()), d_pool1);
  const Matrix d_pre1 = nn::relu_backward(t.conv1_pre, d_act1);
  nn::conv1d_backward(t.input, params_.conv1, d_pre1, grad.conv1);
}

CnnBiLstmModel init_model(const ModelConfig& config) {
  config.validate();
  ModelParams p = ModelParams::zeros(config);
  nn::Rng rng(config.seed);
  const auto k = static_cast<std::size_t>(config.kernel_size);
  auto conv_init = [&](nn::Conv1DParams& conv) {
    nn::glorot_uniform(nn::values_of(conv.kernel), k * conv.in_channels, k * conv.out_channels,
                       rng);
  };
  auto lstm_init = [&](nn::LstmCellParams& cell) {
    const auto d = static_cast<std::size_t>(cell.input_size);
    const auto h = static_cast<std::size_t>(cell.hidden_size);
    nn::glorot_uniform(nn::values_of(cell.w_input), d, 4 * h, rng);
    nn::glorot_uniform(nn::values_of(cell.w_recurrent), h, 4 * h, rng);
    cell.bias.segment(cell.hidden_size, cell.hidden_size).setOnes();
  };
  conv_init(p.conv1);
  conv_init(p.conv2);
  lstm_init(p.bilstm.forward);
  lstm_init(p.bilstm.backward);
  nn::glorot_uniform(nn::values_of(p.head.weight), p.head.weight.rows(), p.head.weight.cols(), rng);
  return CnnBiLstmModel(config, std::move(p));
}

std::vector<double> predict_proba(const CnnBiLstmModel& model,
                                  std::span<const SequenceWindow> windows, int threads) {
  std::vector<double> scores(windows.size());
  parallel_for(windows.size(), resolve_threads(threads),
               [&](std::size_t i) { scores[i] = model.score(windows[i].x); });
  return scores;
}

}  // namespace nids
