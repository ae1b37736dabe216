// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nids/checkpoint.hpp"
#include "nids/metrics.hpp"
#include "nids/model.hpp"
#include "nids/preprocess.hpp"

namespace nids {

struct TrainConfig {
  int epochs = 20;
  int batch_size = 256;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool class_weighting = true;
  double threshold_step = 0.01;
  std::uint64_t seed = 42;
  int threads = 0;  // 0 = hardware concurrency; results do not depend on it

  void validate() const;  // throws InvalidConfig
};

// ---------------------------------------------------------------- loss

struct ClassWeights {
  double positive = 1.0;
  double negative = 1.0;
};

// (N / (2 N_pos), N / (2 N_neg)); unit weights if either class is absent.
ClassWeights inverse_frequency_weights(std::span<const std::uint8_t> labels);

inline constexpr double kScoreClamp = 1e-7;

struct LossResult {
  double loss = 0.0;
  std::vector<double> d_scores;  // dLoss/dscore_i
};

// -(1/N) sum [w_pos y log p + w_neg (1 - y) log(1 - p)], with p clamped to
// [1e-7, 1 - 1e-7]. The gradient is that of the clamped expression (zero
// where the clamp is active).
LossResult weighted_bce(std::span<const double> scores, std::span<const std::uint8_t> labels,
                        const ClassWeights& weights);

// dLoss/dlogit for one sample of a batch of `batch` when score =
// logistic(logit); the unclamped closed form, finite for every logit.
double weighted_bce_logit_grad(double score, std::uint8_t label, const ClassWeights& weights,
                               std::size_t batch);

// ---------------------------------------------------------------- Adam

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam update of a flat array; `step` is the already
// incremented step count t >= 1.
void adam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                 std::span<double> v, long step, const AdamConfig& config);

struct AdamState {
  ModelParams m;
  ModelParams v;
  long step = 0;

  static AdamState for_model(const ModelConfig& config);
};

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamConfig& config);

// ---------------------------------------------------------------- training

struct EpochLog {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_f1 = 0.0;
  double threshold = 0.0;

  bool operator==(const EpochLog&) const = default;
};

// Owns the optimizer state and the generator that drives shuffling and
// dropout across epochs.
class Trainer {
 public:
  Trainer(CnnBiLstmModel model, TrainConfig config, ClassWeights weights);

  // Shuffles, runs mini-batches (forward in train mode, weighted BCE,
  // backward, Adam) and returns the batch-size-weighted mean batch loss.
  double train_epoch(std::span<const SequenceWindow> windows);

  const CnnBiLstmModel& model() const { return model_; }
  CnnBiLstmModel& model() { return model_; }
  const AdamState& adam() const { return adam_; }

 private:
  double train_batch(std::span<const SequenceWindow> windows, std::span<const std::size_t> batch);

  CnnBiLstmModel model_;
  TrainConfig config_;
  ClassWeights weights_;
  AdamState adam_;
  nn::Rng rng_;
  std::vector<ModelParams> chunk_grads_;
  ModelParams batch_grad_;
};

struct FitResult {
  CnnBiLstmModel best_model;
  double threshold = 0.5;
  int best_epoch = 0;
  double best_val_f1 = 0.0;
  std::vector<EpochLog> log;
};

// Trains for config.epochs, tuning the threshold on validation F1 after each
// epoch and keeping the best epoch (ties: earlier). Throws EmptySplit or
// NonFiniteLoss. `on_epoch` sees each log row as soon as it is final.
using EpochCallback = std::function<void(const EpochLog&)>;
FitResult fit(const DatasetSplits& splits, const ModelConfig& model_config,
              const TrainConfig& train_config, const EpochCallback& on_epoch = {});

MetricsReport evaluate(const CnnBiLstmModel& model, double threshold,
                       std::span<const SequenceWindow> windows, int threads = 1);
MetricsReport evaluate(const Checkpoint& checkpoint, std::span<const SequenceWindow> windows,
                       int threads = 1);

// Shortest decimal form that parses back to the same double.
std::string format_real(double value);

// epoch,train_loss,val_f1,threshold
std::string epoch_log_csv(const std::vector<EpochLog>& log);

std::vector<std::uint8_t> labels_of(std::span<const SequenceWindow> windows);

}  // namespace nids
