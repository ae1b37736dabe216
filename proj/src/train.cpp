// SPDX-License-Identifier: Apache-2.0
#include "nids/train.hpp"

#include <algorithm>
#include <cmath>
#include <charconv>
#include <numeric>

#include "nids/error.hpp"
#include "nids/parallel.hpp"

namespace nids {

namespace {

// Windows per gradient accumulation chunk. Chunk boundaries depend only on
// the batch, never on the thread count, so the reduction order is fixed.
constexpr std::size_t kChunk = 8;

void accumulate(ModelParams& dst, const ModelParams& src) {
  auto d = param_blocks(dst);
  const auto s = param_blocks(src);
  for (std::size_t b = 0; b < d.size(); ++b) {
    auto& out = d[b].values;
    const auto& in = s[b].values;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += in[i];
  }
}

AdamConfig adam_config_of(const TrainConfig& c) {
  return AdamConfig{c.learning_rate, c.beta1, c.beta2, c.epsilon};
}

// A zero learning rate is accepted only by Trainer, where it freezes the
// parameters while still running the forward and backward passes.
void check_train_config(const TrainConfig& c, bool allow_frozen) {
  auto fail = [](const std::string& msg) { throw InvalidConfig("train config: " + msg); };
  if (c.epochs < 1) fail("epochs must be >= 1");
  if (c.batch_size < 1) fail("batch_size must be >= 1");
  const bool rate_ok = c.learning_rate > 0.0 || (allow_frozen && c.learning_rate == 0.0);
  if (!rate_ok || !std::isfinite(c.learning_rate)) fail("learning_rate must be > 0");
  if (!(c.beta1 >= 0.0 && c.beta1 < 1.0)) fail("beta1 must lie in [0, 1)");
  if (!(c.beta2 >= 0.0 && c.beta2 < 1.0)) fail("beta2 must lie in [0, 1)");
  if (!(c.epsilon > 0.0)) fail("epsilon must be > 0");
  if (!(c.threshold_step > 0.0 && c.threshold_step <= 1.0)) {
    fail("threshold_step must lie in (0, 1]");
  }
  if (c.threads < 0) fail("threads must be >= 0");
}

}  // namespace

void TrainConfig::validate() const { check_train_config(*this, false); }

// ---------------------------------------------------------------- loss

ClassWeights inverse_frequency_weights(std::span<const std::uint8_t> labels) {
  const auto total = static_cast<double>(labels.size());
  const auto pos = static_cast<double>(std::count(labels.begin(), labels.end(), std::uint8_t{1}));
  const double neg = total - pos;
  if (pos == 0.0 || neg == 0.0) return {};
  return ClassWeights{total / (2.0 * pos), total / (2.0 * neg)};
}

LossResult weighted_bce(std::span<const double> scores, std::span<const std::uint8_t> labels,
                        const ClassWeights& w) {
  if (scores.size() != labels.size()) throw LengthMismatch(scores.size(), labels.size());
  if (scores.empty()) throw EmptyInput("empty batch");
  const auto n = static_cast<double>(scores.size());
  LossResult r;
  r.d_scores.resize(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double raw = scores[i];
    const double p = std::clamp(raw, kScoreClamp, 1.0 - kScoreClamp);
    const bool clamped = p != raw;
    if (labels[i] == 1) {
      sum += w.positive * std::log(p);
      r.d_scores[i] = clamped ? 0.0 : -w.positive / (n * p);
    } else {
      sum += w.negative * std::log(1.0 - p);
      r.d_scores[i] = clamped ? 0.0 : w.negative / (n * (1.0 - p));
    }
  }
  r.loss = -sum / n;
  return r;
}

double weighted_bce_logit_grad(double score, std::uint8_t label, const ClassWeights& w,
                               std::size_t batch) {
  const double n = static_cast<double>(batch);
  return label == 1 ? -w.positive * (1.0 - score) / n : w.negative * score / n;
}

// ---------------------------------------------------------------- Adam

void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, long step, const AdamConfig& c) {
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size()) {
    throw ShapeMismatch("adam: parameter, gradient and moment arrays differ in size");
  }
  if (step < 1) throw InvalidConfig("adam step count must be >= 1");
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
    v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
    const double m_hat = m[i] / correction1;
    const double v_hat = v[i] / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

AdamState AdamState::for_model(const ModelConfig& config) {
  return AdamState{ModelParams::zeros(config), ModelParams::zeros(config), 0};
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamConfig& config) {
  auto p = param_blocks(params);
  const auto g = param_blocks(grads);
  auto m = param_blocks(state.m);
  auto v = param_blocks(state.v);
  if (g.size() != p.size() || m.size() != p.size() || v.size() != p.size()) {
    throw ShapeMismatch("adam: block count mismatch");
  }
  ++state.step;
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (g[b].shape != p[b].shape || m[b].shape != p[b].shape || v[b].shape != p[b].shape) {
      throw ShapeMismatch("adam: shape mismatch in '" + p[b].name + "'");
    }
    adam_update(p[b].values, g[b].values, m[b].values, v[b].values, state.step, config);
  }
}

// ---------------------------------------------------------------- trainer

Trainer::Trainer(CnnBiLstmModel model, TrainConfig config, ClassWeights weights)
    : model_(std::move(model)),
      config_(std::move(config)),
      weights_(weights),
      adam_(AdamState::for_model(model_.config())),
      rng_(nn::mix_seed(config_.seed)),
      batch_grad_(ModelParams::zeros(model_.config())) {
  check_train_config(config_, true);
}

double Trainer::train_batch(std::span<const SequenceWindow> windows,
                            std::span<const std::size_t> batch) {
  const std::size_t size = batch.size();
  const std::size_t chunks = (size + kChunk - 1) / kChunk;
  while (chunk_grads_.size() < chunks) chunk_grads_.push_back(ModelParams::zeros(model_.config()));

  const std::uint64_t batch_seed = rng_();
  std::vector<double> scores(size);
  std::vector<std::uint8_t> labels(size);

  parallel_for(chunks, resolve_threads(config_.threads), [&](std::size_t c) {
    ModelParams& grad = chunk_grads_[c];
    grad.set_zero();
    ForwardTrace trace;
    const std::size_t end = std::min(size, (c + 1) * kChunk);
    for (std::size_t j = c * kChunk; j < end; ++j) {
      const SequenceWindow& w = windows[batch[j]];
      nn::Rng window_rng(nn::mix_seed(batch_seed + j));
      scores[j] = model_.forward(w.x, nn::Mode::train, window_rng, trace);
      labels[j] = w.label;
      model_.backward(trace, weighted_bce_logit_grad(scores[j], w.label, weights_, size), grad);
    }
  });

  batch_grad_.set_zero();
  for (std::size_t c = 0; c < chunks; ++c) accumulate(batch_grad_, chunk_grads_[c]);
  const double loss = weighted_bce(scores, labels, weights_).loss;
  adam_step(model_.params(), batch_grad_, adam_, adam_config_of(config_));
  return loss;
}

double Trainer::train_epoch(std::span<const SequenceWindow> windows) {
  if (windows.empty()) throw EmptyInput("no training windows");
  std::vector<std::size_t> order(windows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng_);

  const auto batch = static_cast<std::size_t>(config_.batch_size);
  double weighted_sum = 0.0;
  for (std::size_t start = 0; start < order.size(); start += batch) {
    const std::size_t len = std::min(batch, order.size() - start);
    const double loss = train_batch(windows, std::span(order).subspan(start, len));
    weighted_sum += loss * static_cast<double>(len);
  }
  return weighted_sum / static_cast<double>(windows.size());
}

// ---------------------------------------------------------------- fit / evaluate

std::vector<std::uint8_t> labels_of(std::span<const SequenceWindow> windows) {
  std::vector<std::uint8_t> labels;
  labels.reserve(windows.size());
  for (const auto& w : windows) labels.push_back(w.label);
  return labels;
}

FitResult fit(const DatasetSplits& splits, const ModelConfig& model_config,
              const TrainConfig& train_config, const EpochCallback& on_epoch) {
  if (splits.train.empty()) throw EmptySplit("training split is empty");
  if (splits.val.empty()) throw EmptySplit("validation split is empty");
  if (splits.test.empty()) throw EmptySplit("test split is empty");
  train_config.validate();

  const auto train_labels = labels_of(splits.train);
  const ClassWeights weights =
      train_config.class_weighting ? inverse_frequency_weights(train_labels) : ClassWeights{};
  const auto val_labels = labels_of(splits.val);

  Trainer trainer(init_model(model_config), train_config, weights);
  FitResult result{trainer.model(), 0.5, 0, -1.0, {}};
  for (int epoch = 1; epoch <= train_config.epochs; ++epoch) {
    const double loss = trainer.train_epoch(splits.train);
    if (!std::isfinite(loss)) throw NonFiniteLoss(epoch);
    const auto scores = predict_proba(trainer.model(), splits.val, train_config.threads);
    const ThresholdChoice choice = tune_threshold(scores, val_labels, train_config.threshold_step);
    result.log.push_back(EpochLog{epoch, loss, choice.f1, choice.threshold});
    if (choice.f1 > result.best_val_f1) {
      result.best_model = trainer.model();
      result.threshold = choice.threshold;
      result.best_epoch = epoch;
      result.best_val_f1 = choice.f1;
    }
    if (on_epoch) on_epoch(result.log.back());
  }
  return result;
}

MetricsReport evaluate(const CnnBiLstmModel& model, double threshold,
                       std::span<const SequenceWindow> windows, int threads) {
  if (windows.empty()) throw EmptyInput("no windows to evaluate");
  const auto scores = predict_proba(model, windows, threads);
  return compute_metrics(scores, labels_of(windows), threshold);
}

MetricsReport evaluate(const Checkpoint& checkpoint, std::span<const SequenceWindow> windows,
                       int threads) {
  return evaluate(checkpoint.model, checkpoint.threshold, windows, threads);
}

std::string format_real(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

std::string epoch_log_csv(const std::vector<EpochLog>& log) {
  std::string out = "epoch,train_loss,val_f1,threshold\n";
  for (const auto& e : log) {
    out += std::to_string(e.epoch) + ',' + format_real(e.train_loss) + ',' + format_real(e.val_f1) +
           ',' + format_real(e.threshold) + '\n';
  }
  return out;
}

}  // namespace nids
