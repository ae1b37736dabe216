// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <unistd.h>

#include "json.hpp"
#include "nids/cli.hpp"

namespace nids::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kSource = NIDS_SOURCE_DIR;
const std::string kSample = (kSource / "data" / "sample_flows.csv").string();

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// Small network so each training run takes well under a second.
std::vector<std::string> quick_train(const fs::path& out, const std::string& seed = "42") {
  return {"train",           "--data",          kSample, "--out",          out.string(),
          "--epochs",        "2",               "--seed", seed,          "--conv1-filters",
          "8",               "--conv2-filters", "8",      "--lstm-hidden", "6",
          "--batch-size",    "128"};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("nids_cli_test_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  // Trains once into dir_/run and returns the checkpoint path.
  fs::path trained() {
    const fs::path run = dir_ / "run";
    const Outcome o = invoke(quick_train(run));
    EXPECT_EQ(o.code, kOk) << o.err;
    return run / "model.json";
  }

  fs::path write(const std::string& name, const std::string& text) {
    const fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }

  fs::path dir_;
};

TEST_F(CliTest, TrainWritesArtifacts) {
  const fs::path run = dir_ / "run";
  const Outcome o = invoke(quick_train(run));
  ASSERT_EQ(o.code, kOk) << o.err;
  for (const char* f : {"model.json", "loss_curve.csv", "metrics.json"}) {
    EXPECT_TRUE(fs::is_regular_file(run / f)) << f;
  }
  const auto metrics = nlohmann::json::parse(slurp(run / "metrics.json"));
  EXPECT_EQ(nlohmann::json::parse(o.out), metrics);
  const std::string curve = slurp(run / "loss_curve.csv");
  EXPECT_EQ(curve.rfind("epoch,train_loss,val_f1,threshold\n", 0), 0u);
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 3);
  for (const auto& entry : fs::directory_iterator(run)) {
    EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos);
  }
}

TEST_F(CliTest, SameSeedIsByteIdentical) {
  ASSERT_EQ(invoke(quick_train(dir_ / "a")).code, kOk);
  ASSERT_EQ(invoke(quick_train(dir_ / "b")).code, kOk);
  ASSERT_EQ(invoke(quick_train(dir_ / "c", "43")).code, kOk);
  for (const char* f : {"metrics.json", "loss_curve.csv", "model.json"}) {
    EXPECT_EQ(slurp(dir_ / "a" / f), slurp(dir_ / "b" / f)) << f;
  }
  EXPECT_NE(slurp(dir_ / "a" / "model.json"), slurp(dir_ / "c" / "model.json"));
}

TEST_F(CliTest, ThreadCountDoesNotChangeResults) {
  auto one = quick_train(dir_ / "one");
  one.insert(one.end(), {"--threads", "1"});
  auto three = quick_train(dir_ / "three");
  three.insert(three.end(), {"--threads", "3"});
  ASSERT_EQ(invoke(one).code, kOk);
  ASSERT_EQ(invoke(three).code, kOk);
  EXPECT_EQ(slurp(dir_ / "one" / "model.json"), slurp(dir_ / "three" / "model.json"));
}

TEST_F(CliTest, MissingDataFile) {
  const std::string missing = (dir_ / "absent.csv").string();
  const Outcome o = invoke({"train", "--data", missing, "--out", (dir_ / "run").string()});
  EXPECT_EQ(o.code, kDataError);
  EXPECT_NE(o.err.find(missing), std::string::npos) << o.err;
  EXPECT_EQ(o.err.rfind("nids: error: ", 0), 0u);
  EXPECT_FALSE(fs::exists(dir_ / "run" / "model.json"));
}

TEST_F(CliTest, EvaluateReportsUnitIntervalMetrics) {
  const fs::path ck = trained();
  const Outcome o = invoke({"evaluate", "--checkpoint", ck.string(), "--data", kSample});
  ASSERT_EQ(o.code, kOk) << o.err;
  const auto j = nlohmann::json::parse(o.out);
  for (const char* k : {"accuracy", "precision", "recall", "f1"}) {
    ASSERT_TRUE(j.contains(k)) << k;
    EXPECT_GE(j[k].get<double>(), 0.0);
    EXPECT_LE(j[k].get<double>(), 1.0);
  }
  EXPECT_EQ(j["tp"].get<long>() + j["tn"].get<long>() + j["fp"].get<long>() + j["fn"].get<long>(),
            2991);
}

TEST_F(CliTest, CorruptCheckpoint) {
  const fs::path ck = trained();
  const std::string text = slurp(ck);
  const fs::path bad = write("bad.json", text.substr(0, text.size() / 3));
  const Outcome o = invoke({"evaluate", "--checkpoint", bad.string(), "--data", kSample});
  EXPECT_EQ(o.code, kConfigError);
  EXPECT_NE(o.err.find("checkpoint"), std::string::npos) << o.err;

  const Outcome missing =
      invoke({"evaluate", "--checkpoint", (dir_ / "none.json").string(), "--data", kSample});
  EXPECT_EQ(missing.code, kConfigError);
}

TEST_F(CliTest, FeatureArityMismatch) {
  const fs::path ck = trained();
  const fs::path two = write("two.csv", "IN_BYTES,OUT_BYTES,Label,Attack\n1,2,1,DoS\n3,4,0,Benign\n");
  const Outcome o = invoke({"evaluate", "--checkpoint", ck.string(), "--data", two.string(),
                            "--features", "IN_BYTES,OUT_BYTES", "--drop-columns", "none"});
  EXPECT_EQ(o.code, kDataError);
  EXPECT_NE(o.err.find("expected 10"), std::string::npos) << o.err;
}

TEST_F(CliTest, PredictOnUnlabeledFlows) {
  const fs::path ck = trained();
  const std::string unlabeled = (kSource / "data" / "sample_unlabeled.csv").string();
  const auto args = [&](const fs::path& out) {
    return std::vector<std::string>{"predict", "--checkpoint", ck.string(), "--data", unlabeled,
                                    "--out", out.string()};
  };
  ASSERT_EQ(invoke(args(dir_ / "p1")).code, kOk);
  ASSERT_EQ(invoke(args(dir_ / "p2")).code, kOk);
  const std::string csv = slurp(dir_ / "p1" / "predictions.csv");
  EXPECT_EQ(csv, slurp(dir_ / "p2" / "predictions.csv"));
  EXPECT_EQ(csv.rfind("origin_index,score,predicted_label\n", 0), 0u);
  // 400 rows, T = 10, stride 1
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 391);
}

TEST_F(CliTest, PredictInputShorterThanWindow) {
  const fs::path ck = trained();
  std::string text = slurp(kSample);
  std::istringstream lines(text);
  std::string short_csv, line;
  for (int i = 0; i < 6 && std::getline(lines, line); ++i) short_csv += line + "\n";
  const fs::path few = write("few.csv", short_csv);
  const Outcome o = invoke({"predict", "--checkpoint", ck.string(), "--data", few.string(),
                            "--out", (dir_ / "p").string()});
  EXPECT_EQ(o.code, kDataError);
  EXPECT_FALSE(fs::exists(dir_ / "p" / "predictions.csv"));
}

TEST_F(CliTest, HelpListsEveryFlag) {
  const std::map<std::string, std::vector<std::string>> flags{
      {"train",
       {"--config", "--data", "--features", "--label-column", "--attack-column", "--drop-columns",
        "--lenient", "--window", "--stride", "--train-ratio", "--val-ratio", "--test-ratio",
        "--log1p-columns", "--split-mode", "--conv1-filters", "--conv2-filters", "--kernel-size",
        "--pool-width", "--dropout", "--lstm-hidden", "--epochs", "--batch-size",
        "--learning-rate", "--beta1", "--beta2", "--epsilon", "--class-weighting",
        "--threshold-step", "--seed", "--threads", "--out"}},
      {"evaluate", {"--checkpoint", "--data", "--features", "--stride", "--threads", "--out"}},
      {"predict", {"--checkpoint", "--data", "--features", "--stride", "--threads", "--out"}},
      {"summarize", {"--data", "--label-column", "--lenient"}},
      {"synth", {"--out", "--rows", "--benign-fraction", "--seed", "--unlabeled"}},
  };
  for (const auto& [command, names] : flags) {
    const Outcome o = invoke({command, "--help"});
    EXPECT_EQ(o.code, kOk);
    for (const auto& f : names) EXPECT_NE(o.out.find(f), std::string::npos) << command << " " << f;
  }
  const Outcome top = invoke({"--help"});
  EXPECT_EQ(top.code, kOk);
  for (const auto& [command, names] : flags) EXPECT_NE(top.out.find(command), std::string::npos);
}

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(invoke({"train", "--data", kSample, "--bogus"}).code, kConfigError);
  EXPECT_EQ(invoke({}).code, kConfigError);
  EXPECT_EQ(invoke({"train", "--data", kSample, "--split-mode", "random"}).code, kConfigError);
  const Outcome ratios = invoke({"train", "--data", kSample, "--train-ratio", "0.9", "--out",
                                 (dir_ / "r").string()});
  EXPECT_EQ(ratios.code, kConfigError);
  EXPECT_NE(ratios.err.find("ratio"), std::string::npos) << ratios.err;
}

TEST_F(CliTest, ConfigFileAndOverrides) {
  const fs::path ini = write("run.ini",
                             "[data]\ndata = " + kSample +
                                 "\n[model]\nconv1_filters = 8\nconv2_filters = 8\n"
                                 "lstm_hidden = 6\n[train]\nepochs = 3\nbatch_size = 128\n");
  const fs::path run = dir_ / "run";
  const Outcome o =
      invoke({"train", "--config", ini.string(), "--epochs", "2", "--out", run.string()});
  ASSERT_EQ(o.code, kOk) << o.err;
  const std::string curve = slurp(run / "loss_curve.csv");
  EXPECT_EQ(std::count(curve.begin(), curve.end(), '\n'), 3);
  // same hyperparameters given as flags produce the same model
  ASSERT_EQ(invoke(quick_train(dir_ / "flags")).code, kOk);
  EXPECT_EQ(slurp(run / "model.json"), slurp(dir_ / "flags" / "model.json"));

  const fs::path unknown = write("unknown.ini", "[train]\nmomentum = 0.5\n");
  EXPECT_EQ(invoke({"train", "--config", unknown.string(), "--data", kSample}).code,
            kConfigError);
  const fs::path misplaced = write("misplaced.ini", "[model]\nepochs = 5\n");
  EXPECT_EQ(invoke({"train", "--config", misplaced.string(), "--data", kSample}).code,
            kConfigError);
}

TEST_F(CliTest, AtomicWriteFailureLeavesNoPartialFile) {
  const fs::path run = dir_ / "run";
  fs::create_directories(run / "metrics.json");  // a directory where a file must go
  const Outcome o = invoke(quick_train(run));
  EXPECT_NE(o.code, kOk);
  EXPECT_TRUE(fs::is_directory(run / "metrics.json"));
  for (const auto& entry : fs::directory_iterator(run)) {
    EXPECT_EQ(entry.path().filename().string().find(".tmp"), std::string::npos)
        << entry.path();
  }
}

TEST_F(CliTest, SummarizeAndSynth) {
  const fs::path csv = dir_ / "synth.csv";
  ASSERT_EQ(invoke({"synth", "--rows", "1000", "--out", csv.string()}).code, kOk);
  const Outcome o = invoke({"summarize", "--data", csv.string()});
  ASSERT_EQ(o.code, kOk) << o.err;
  const auto j = nlohmann::json::parse(o.out);
  EXPECT_EQ(j["total"], 1000);
  EXPECT_EQ(j["benign"], 23);
}

}  // namespace
}  // namespace nids::cli
