// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "json.hpp"
#include "nids/error.hpp"
#include "nids/metrics.hpp"
#include "nids/synthetic.hpp"
#include "nids/train.hpp"

namespace nids {
namespace {

std::vector<std::uint8_t> u8(std::initializer_list<int> v) {
  return std::vector<std::uint8_t>(v.begin(), v.end());
}

// ---------------------------------------------------------------- loss

TEST(WeightedBce, Examples) {
  const std::vector<double> half{0.5, 0.5};
  EXPECT_NEAR(weighted_bce(half, u8({1, 0}), {}).loss, std::log(2.0), 1e-12);

  const std::vector<double> confident{1.0 - kScoreClamp};
  EXPECT_LE(weighted_bce(confident, u8({1}), {}).loss, 1e-6);

  const std::vector<double> zero{0.0};
  const LossResult clamped = weighted_bce(zero, u8({1}), {});
  EXPECT_TRUE(std::isfinite(clamped.loss));
  EXPECT_NEAR(clamped.loss, -std::log(kScoreClamp), 1e-9);
}

TEST(WeightedBce, Errors) {
  const std::vector<double> two{0.1, 0.2};
  EXPECT_THROW(weighted_bce(two, u8({1}), {}), LengthMismatch);
  EXPECT_THROW(weighted_bce(std::vector<double>{}, u8({}), {}), EmptyInput);
}

TEST(WeightedBce, WeightsScaleTerms) {
  const std::vector<double> p{0.7, 0.2};
  const ClassWeights w{3.0, 0.5};
  const double want = -(3.0 * std::log(0.7) + 0.5 * std::log(0.8)) / 2.0;
  EXPECT_NEAR(weighted_bce(p, u8({1, 0}), w).loss, want, 1e-12);
}

TEST(WeightedBce, LogitGradientMatchesChainRule) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(0.01, 0.99);
  const ClassWeights w{2.5, 0.6};
  for (int i = 0; i < 200; ++i) {
    const double p = unit(rng);
    const std::uint8_t y = static_cast<std::uint8_t>(rng() % 2);
    const std::vector<double> s{p, 0.5, 0.5};
    const std::vector<std::uint8_t> l{y, 0, 1};
    const double chain = weighted_bce(s, l, w).d_scores[0] * p * (1.0 - p);
    EXPECT_NEAR(weighted_bce_logit_grad(p, y, w, 3), chain, 1e-12);
  }
}

TEST(ClassWeighting, InverseFrequency) {
  const ClassWeights w = inverse_frequency_weights(u8({1, 1, 1, 0}));
  EXPECT_DOUBLE_EQ(w.positive, 4.0 / 6.0);
  EXPECT_DOUBLE_EQ(w.negative, 2.0);
  const ClassWeights one_class = inverse_frequency_weights(u8({1, 1}));
  EXPECT_EQ(one_class.positive, 1.0);
  EXPECT_EQ(one_class.negative, 1.0);
}

TEST(ClassWeighting, BalancedConfidentLossIgnoresClassRatio) {
  // With inverse-frequency weights each class contributes half of the loss,
  // so a model with the same per-class confidence scores the same loss at
  // any class ratio.
  const double p = 0.9;
  const double want = -std::log(p);
  for (int pos : {1, 5, 50, 97}) {
    std::vector<double> scores;
    std::vector<std::uint8_t> labels;
    for (int i = 0; i < 100; ++i) {
      const bool malicious = i < pos;
      labels.push_back(malicious ? 1 : 0);
      scores.push_back(malicious ? p : 1.0 - p);
    }
    EXPECT_NEAR(weighted_bce(scores, labels, inverse_frequency_weights(labels)).loss, want, 1e-12);
  }
}

// ---------------------------------------------------------------- Adam

TEST(Adam, ZeroGradientLeavesParameters) {
  std::vector<double> p{0.3, -1.2, 4.0};
  const std::vector<double> before = p;
  std::vector<double> g(3, 0.0), m(3, 0.0), v(3, 0.0);
  for (long t = 1; t <= 5; ++t) adam_update(p, g, m, v, t, {});
  EXPECT_EQ(p, before);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> p{2.0};
  std::vector<double> g{1.0}, m{0.0}, v{0.0};
  adam_update(p, g, m, v, 1, {});
  EXPECT_NEAR(p[0] - 2.0, -0.001, 1e-10);
}

TEST(Adam, ModelStepDeterministicAndShapeChecked) {
  ModelConfig c;
  c.window = 6;
  c.features = 3;
  c.conv1_filters = 2;
  c.conv2_filters = 2;
  c.lstm_hidden = 2;
  ModelParams grads = ModelParams::zeros(c);
  double k = 0.0;
  for (auto& b : param_blocks(grads)) {
    for (double& x : b.values) x = std::sin(k += 1.0);
  }
  ModelParams a = init_model(c).params();
  ModelParams b = a;
  AdamState sa = AdamState::for_model(c), sb = AdamState::for_model(c);
  for (int i = 0; i < 3; ++i) {
    adam_step(a, grads, sa, {});
    adam_step(b, grads, sb, {});
  }
  EXPECT_EQ(sa.step, 3);
  const auto ba = param_blocks(std::as_const(a));
  const auto bb = param_blocks(std::as_const(b));
  for (std::size_t i = 0; i < ba.size(); ++i) {
    EXPECT_TRUE(std::equal(ba[i].values.begin(), ba[i].values.end(), bb[i].values.begin()));
  }

  ModelConfig wider = c;
  wider.lstm_hidden = 3;
  EXPECT_THROW(adam_step(a, ModelParams::zeros(wider), sa, {}), ShapeMismatch);
}

// ---------------------------------------------------------------- metrics

std::pair<std::vector<double>, std::vector<std::uint8_t>> from_counts(int tp, int tn, int fp,
                                                                      int fn) {
  std::vector<double> s;
  std::vector<std::uint8_t> l;
  auto add = [&](int n, double score, std::uint8_t label) {
    for (int i = 0; i < n; ++i) {
      s.push_back(score);
      l.push_back(label);
    }
  };
  add(tp, 0.9, 1);
  add(tn, 0.1, 0);
  add(fp, 0.8, 0);
  add(fn, 0.2, 1);
  return {s, l};
}

TEST(ComputeMetrics, WorkedExample) {
  const auto [s, l] = from_counts(50, 40, 5, 5);
  const MetricsReport r = compute_metrics(s, l, 0.5);
  EXPECT_EQ(r.counts, (ConfusionCounts{50, 40, 5, 5}));
  EXPECT_NEAR(r.accuracy, 0.90, 1e-4);
  EXPECT_NEAR(r.precision, 0.9091, 1e-4);
  EXPECT_NEAR(r.recall, 0.9091, 1e-4);
  EXPECT_NEAR(r.f1, 0.9091, 1e-4);
}

TEST(ComputeMetrics, Perfect) {
  const auto [s, l] = from_counts(7, 3, 0, 0);
  const MetricsReport r = compute_metrics(s, l, 0.5);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.precision, 1.0);
  EXPECT_EQ(r.recall, 1.0);
  EXPECT_EQ(r.f1, 1.0);
}

TEST(ComputeMetrics, NoPredictedPositives) {
  const auto [s, l] = from_counts(0, 4, 0, 6);
  const MetricsReport r = compute_metrics(s, l, 0.5);
  EXPECT_EQ(r.precision, 0.0);
  EXPECT_EQ(r.recall, 0.0);
  EXPECT_EQ(r.f1, 0.0);
  EXPECT_NEAR(r.accuracy, 0.4, 1e-15);
}

TEST(ComputeMetrics, BoundaryScoreIsPositive) {
  const std::vector<double> s{0.5};
  EXPECT_EQ(compute_metrics(s, u8({1}), 0.5).counts.tp, 1u);
}

TEST(ComputeMetrics, Errors) {
  const std::vector<double> s{0.5, 0.1};
  EXPECT_THROW(compute_metrics(s, u8({1}), 0.5), LengthMismatch);
  EXPECT_THROW(compute_metrics(std::vector<double>{}, u8({}), 0.5), EmptyInput);
}

struct OracleMetrics {
  double accuracy, precision, recall, f1;
};

// Straight from the definitions, with no shared code.
OracleMetrics oracle_metrics(const std::vector<double>& s, const std::vector<std::uint8_t>& l,
                             double tau) {
  double tp = 0, tn = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const bool pred = s[i] >= tau;
    if (pred && l[i]) ++tp;
    else if (pred) ++fp;
    else if (l[i]) ++fn;
    else ++tn;
  }
  const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
  const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
  return {(tp + tn) / (tp + tn + fp + fn), precision, recall, f1};
}

TEST(ComputeMetrics, MatchesOracleAndInvariants) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng() % 60;
    std::vector<double> s(n);
    std::vector<std::uint8_t> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = unit(rng);
      l[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    const double tau = unit(rng);
    const MetricsReport r = compute_metrics(s, l, tau);
    const OracleMetrics o = oracle_metrics(s, l, tau);
    ASSERT_NEAR(r.accuracy, o.accuracy, 1e-12);
    ASSERT_NEAR(r.precision, o.precision, 1e-12);
    ASSERT_NEAR(r.recall, o.recall, 1e-12);
    ASSERT_NEAR(r.f1, o.f1, 1e-12);
    EXPECT_EQ(r.counts.total(), n);
    for (double m : {r.accuracy, r.precision, r.recall, r.f1}) {
      EXPECT_GE(m, 0.0);
      EXPECT_LE(m, 1.0);
    }
    if (r.precision + r.recall > 0) {
      EXPECT_NEAR(r.f1, 2 * r.precision * r.recall / (r.precision + r.recall), 1e-12);
    }
    // raising the threshold never adds predicted positives
    const MetricsReport higher = compute_metrics(s, l, std::min(1.0, tau + 0.1));
    EXPECT_LE(higher.counts.tp + higher.counts.fp, r.counts.tp + r.counts.fp);
  }
}

TEST(MetricsReport, Json) {
  const auto [s, l] = from_counts(1, 1, 0, 0);
  const auto j = nlohmann::json::parse(compute_metrics(s, l, 0.5).to_json());
  EXPECT_EQ(j.size(), 8u);
  EXPECT_EQ(j["tp"], 1);
  EXPECT_EQ(j["fn"], 0);
  EXPECT_EQ(j["f1"], 1.0);
}

// ---------------------------------------------------------------- threshold

TEST(TuneThreshold, Examples) {
  const std::vector<double> s{0.9, 0.8, 0.2};
  const ThresholdChoice c = tune_threshold(s, u8({1, 1, 0}), 0.01);
  EXPECT_DOUBLE_EQ(c.threshold, 0.21);
  EXPECT_EQ(c.f1, 1.0);

  const ThresholdChoice all_pos = tune_threshold(s, u8({1, 1, 1}), 0.01);
  EXPECT_EQ(all_pos.threshold, 0.0);
  EXPECT_EQ(all_pos.f1, 1.0);

  const ThresholdChoice all_neg = tune_threshold(s, u8({0, 0, 0}), 0.01);
  EXPECT_EQ(all_neg.threshold, 0.0);
  EXPECT_EQ(all_neg.f1, 0.0);
}

TEST(TuneThreshold, GridAndErrors) {
  const auto g = threshold_grid(0.01);
  ASSERT_EQ(g.size(), 101u);
  EXPECT_EQ(g.front(), 0.0);
  EXPECT_EQ(g[21], 0.21);
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(threshold_grid(1.0).size(), 2u);
  const auto coarse = threshold_grid(0.3);
  ASSERT_EQ(coarse.size(), 5u);
  EXPECT_NEAR(coarse[3], 0.9, 1e-15);
  EXPECT_EQ(coarse.back(), 1.0);
  EXPECT_THROW(threshold_grid(0.0), InvalidConfig);
  EXPECT_THROW(tune_threshold(std::vector<double>{}, u8({}), 0.01), EmptyInput);
}

TEST(TuneThreshold, MatchesBruteForce) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng() % 40;
    std::vector<double> s(n);
    std::vector<std::uint8_t> l(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 3 == 0 ? std::round(unit(rng) * 20) / 20 : unit(rng);
      l[i] = static_cast<std::uint8_t>(rng() % 2);
    }
    double best_tau = 0.0, best_f1 = -1.0;
    for (int k = 0; k <= 100; ++k) {
      const double tau = k / 100.0;
      const double f1 = oracle_metrics(s, l, tau).f1;
      if (f1 > best_f1) {
        best_f1 = f1;
        best_tau = tau;
      }
    }
    const ThresholdChoice c = tune_threshold(s, l, 0.01);
    ASSERT_EQ(c.threshold, best_tau) << "trial " << trial;
    ASSERT_NEAR(c.f1, best_f1, 1e-12);
  }
}

// ---------------------------------------------------------------- training

ModelConfig tiny_model(double dropout = 0.0) {
  ModelConfig c;
  c.window = 10;
  c.features = 4;
  c.conv1_filters = 4;
  c.conv2_filters = 4;
  c.lstm_hidden = 3;
  c.dropout_rate = dropout;
  c.seed = 3;
  return c;
}

TrainConfig quick_train(int batch = 16) {
  TrainConfig t;
  t.batch_size = batch;
  t.learning_rate = 0.01;
  t.seed = 8;
  return t;
}

bool same_params(const CnnBiLstmModel& a, const CnnBiLstmModel& b) {
  const auto pa = param_blocks(a.params());
  const auto pb = param_blocks(b.params());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (!std::equal(pa[i].values.begin(), pa[i].values.end(), pb[i].values.begin())) return false;
  }
  return true;
}

TEST(Trainer, ZeroLearningRateFreezesModel) {
  const auto windows = synthetic::spike_windows(60, 10, 4, 1);
  const CnnBiLstmModel initial = init_model(tiny_model());
  TrainConfig cfg = quick_train(16);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidConfig);

  const ClassWeights w = inverse_frequency_weights(labels_of(windows));
  Trainer trainer(initial, cfg, w);
  const double loss = trainer.train_epoch(windows);
  EXPECT_TRUE(same_params(trainer.model(), initial));
  const auto scores = predict_proba(initial, windows);
  EXPECT_NEAR(loss, weighted_bce(scores, labels_of(windows), w).loss, 1e-12);
}

TEST(Trainer, OneBatchWhenBatchCoversSet) {
  const auto windows = synthetic::spike_windows(30, 10, 4, 2);
  Trainer whole(init_model(tiny_model()), quick_train(30), {});
  whole.train_epoch(windows);
  EXPECT_EQ(whole.adam().step, 1);
  Trainer larger(init_model(tiny_model()), quick_train(500), {});
  larger.train_epoch(windows);
  EXPECT_EQ(larger.adam().step, 1);
  Trainer split(init_model(tiny_model()), quick_train(8), {});
  split.train_epoch(windows);
  EXPECT_EQ(split.adam().step, 4);  // 8 + 8 + 8 + 6
}

TEST(Trainer, Deterministic) {
  const auto windows = synthetic::spike_windows(50, 10, 4, 3);
  TrainConfig one = quick_train(16);
  one.threads = 1;
  TrainConfig many = one;
  many.threads = 3;
  Trainer a(init_model(tiny_model(0.3)), one, {});
  Trainer b(init_model(tiny_model(0.3)), one, {});
  Trainer c(init_model(tiny_model(0.3)), many, {});
  for (int e = 0; e < 2; ++e) {
    const double la = a.train_epoch(windows);
    EXPECT_EQ(la, b.train_epoch(windows));
    EXPECT_EQ(la, c.train_epoch(windows));
  }
  EXPECT_TRUE(same_params(a.model(), b.model()));
  EXPECT_TRUE(same_params(a.model(), c.model()));
  EXPECT_FALSE(same_params(a.model(), init_model(tiny_model(0.3))));
}

TEST(Trainer, EmptyInput) {
  Trainer t(init_model(tiny_model()), quick_train(), {});
  EXPECT_THROW(t.train_epoch({}), EmptyInput);
}

DatasetSplits spike_splits(std::size_t n, std::uint64_t seed) {
  return stratified_split(synthetic::spike_windows(n, 10, 4, seed), SplitRatios{}, seed);
}

TEST(Fit, LogsEveryEpoch) {
  const DatasetSplits splits = spike_splits(60, 4);
  TrainConfig cfg = quick_train();
  cfg.epochs = 20;
  int seen = 0;
  const FitResult r = fit(splits, tiny_model(), cfg, [&](const EpochLog& e) {
    EXPECT_EQ(e.epoch, ++seen);
  });
  ASSERT_EQ(r.log.size(), 20u);
  EXPECT_EQ(seen, 20);
  for (std::size_t i = 0; i < r.log.size(); ++i) {
    EXPECT_EQ(r.log[i].epoch, static_cast<int>(i) + 1);
    EXPECT_GE(r.log[i].threshold, 0.0);
    EXPECT_LE(r.log[i].threshold, 1.0);
  }
  // the kept epoch has the highest validation F1, earliest on ties
  double best = -1.0;
  int best_epoch = 0;
  for (const auto& e : r.log) {
    if (e.val_f1 > best) {
      best = e.val_f1;
      best_epoch = e.epoch;
    }
  }
  EXPECT_EQ(r.best_epoch, best_epoch);
  EXPECT_EQ(r.threshold, r.log[best_epoch - 1].threshold);
}

TEST(Fit, SingleEpochKeepsEpochOne) {
  const DatasetSplits splits = spike_splits(60, 5);
  TrainConfig cfg = quick_train();
  cfg.epochs = 1;
  const FitResult r = fit(splits, tiny_model(), cfg);
  EXPECT_EQ(r.best_epoch, 1);
  ASSERT_EQ(r.log.size(), 1u);

  Trainer replay(init_model(tiny_model()), cfg,
                 inverse_frequency_weights(labels_of(splits.train)));
  replay.train_epoch(splits.train);
  EXPECT_TRUE(same_params(r.best_model, replay.model()));
}

TEST(Fit, EmptySplitRejected) {
  DatasetSplits splits = spike_splits(60, 6);
  splits.val.clear();
  EXPECT_THROW(fit(splits, tiny_model(), quick_train()), EmptySplit);
}

// ---------------------------------------------------------------- evaluate

TEST(Evaluate, DeterministicAndConsistent) {
  const auto windows = synthetic::spike_windows(40, 10, 4, 7);
  const CnnBiLstmModel m = init_model(tiny_model());
  const MetricsReport a = evaluate(m, 0.5, windows);
  EXPECT_EQ(a, evaluate(m, 0.5, windows, 2));
  EXPECT_EQ(a, compute_metrics(predict_proba(m, windows), labels_of(windows), 0.5));
  const Checkpoint ck{m, FeatureEncoder{}, 0.5};
  EXPECT_EQ(a, evaluate(ck, windows));
  EXPECT_THROW(evaluate(m, 0.5, std::vector<SequenceWindow>{}), EmptyInput);
}

TEST(Evaluate, MarginModelScoresPerfectly) {
  // Every score is on the correct side of tau.
  const auto windows = synthetic::spike_windows(40, 10, 4, 8);
  const CnnBiLstmModel m = init_model(tiny_model());
  const auto scores = predict_proba(m, windows);
  const double lo = *std::min_element(scores.begin(), scores.end());
  std::vector<SequenceWindow> relabeled = windows;
  for (std::size_t i = 0; i < relabeled.size(); ++i) relabeled[i].label = scores[i] > lo ? 1 : 0;
  const MetricsReport r = evaluate(m, std::nextafter(lo, 1.0), relabeled);
  EXPECT_EQ(r.accuracy, 1.0);
}

TEST(EpochLogCsv, Format) {
  const std::vector<EpochLog> log{{1, 0.5, 0.25, 0.3}, {2, 0.125, 1.0, 0.07}};
  EXPECT_EQ(epoch_log_csv(log),
            "epoch,train_loss,val_f1,threshold\n1,0.5,0.25,0.3\n2,0.125,1,0.07\n");
  EXPECT_EQ(format_real(0.1), "0.1");
  EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
}

}  // namespace
}  // namespace nids
