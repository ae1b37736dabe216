// SPDX-License-Identifier: Apache-2.0
#include "nids/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"

#include "nids/checkpoint.hpp"
#include "nids/error.hpp"
#include "nids/flow_ingest.hpp"
#include "nids/io.hpp"
#include "nids/synthetic.hpp"
#include "nids/train.hpp"

namespace nids::cli {
namespace {

namespace fs = std::filesystem;

// Every key a run config file may contain, with the section it lives in.
const std::map<std::string, std::string>& config_keys() {
  static const std::map<std::string, std::string> keys = {
      {"data", "data"},
      {"features", "data"},
      {"label-column", "data"},
      {"attack-column", "data"},
      {"drop-columns", "data"},
      {"lenient", "data"},
      {"window", "preprocess"},
      {"stride", "preprocess"},
      {"train-ratio", "preprocess"},
      {"val-ratio", "preprocess"},
      {"test-ratio", "preprocess"},
      {"log1p-columns", "preprocess"},
      {"split-mode", "preprocess"},
      {"conv1-filters", "model"},
      {"conv2-filters", "model"},
      {"kernel-size", "model"},
      {"pool-width", "model"},
      {"dropout", "model"},
      {"lstm-hidden", "model"},
      {"epochs", "train"},
      {"batch-size", "train"},
      {"learning-rate", "train"},
      {"beta1", "train"},
      {"beta2", "train"},
      {"epsilon", "train"},
      {"class-weighting", "train"},
      {"threshold-step", "train"},
      {"seed", "run"},
      {"threads", "run"},
      {"out", "run"},
      {"checkpoint", "run"},
  };
  return keys;
}

// INI reader for run config files. Sections group keys without nesting them,
// `snake_case` keys are accepted for their dashed flag names, and keys the
// running command has no flag for are skipped so one file can drive train,
// evaluate and predict.
class RunConfigFormat : public CLI::ConfigINI {
 public:
  explicit RunConfigFormat(const CLI::App& root) : root_(root) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    const auto commands = root_.get_subcommands();
    if (commands.empty()) return {};
    const CLI::App* command = commands.front();

    std::vector<CLI::ConfigItem> kept;
    for (auto& item : CLI::ConfigINI::from_config(input)) {
      if (item.name == "++" || item.name == "--") continue;
      const std::string section = CLI::detail::join(item.parents, ".");
      std::string key = item.name;
      std::replace(key.begin(), key.end(), '_', '-');

      const auto known = config_keys().find(key);
      if (known == config_keys().end()) {
        throw CLI::ConfigError("unknown config key '" + item.fullname() + "'");
      }
      if (!section.empty() && section != known->second) {
        throw CLI::ConfigError("config key '" + key + "' belongs in [" + known->second +
                               "], found in [" + section + "]");
      }
      if (command->get_option_no_throw("--" + key) == nullptr) continue;
      item.name = key;
      item.parents = {command->get_name()};
      kept.push_back(std::move(item));
    }
    return kept;
  }

 private:
  const CLI::App& root_;
};

struct Options {
  std::string data;
  std::vector<std::string> features = FlowSchema::nf_bot_iot().feature_columns;
  std::string label_column = "Label";
  std::string attack_column = "Attack";
  std::vector<std::string> drop_columns = FlowSchema::nf_bot_iot().drop_columns;
  bool lenient = false;

  PreprocessConfig preprocess;
  std::vector<std::string> log1p_columns = default_log1p_columns();
  ModelConfig model;
  TrainConfig train;

  std::uint64_t seed = 42;
  int threads = 0;
  std::string out;
  std::string checkpoint;

  std::string split_mode = "stratified";

  // synth
  std::size_t rows = 5000;
  double benign_fraction = 0.0231;
  std::uint64_t synth_seed = 7;
  bool unlabeled = false;
};

// ------------------------------------------------------------ flag groups

void add_config_flag(CLI::App& command, CLI::Option* root_config) {
  command
      .add_option_function<std::string>(
          "--config", [root_config](const std::string& path) { root_config->add_result(path); },
          "INI run config; command-line flags override its values")
      ->trigger_on_parse()
      ->configurable(false)
      ->type_name("PATH");
}

void add_data_flags(CLI::App& command, Options& o, bool labels_required) {
  command.add_option("--data", o.data, "Flow CSV file")->required()->type_name("PATH");
  command.add_option("--features", o.features, "Feature columns, in order")
      ->delimiter(',')
      ->type_name("COL,...");
  command.add_option("--label-column", o.label_column,
                     labels_required ? "Binary label column" : "Binary label column, if present");
  command.add_option("--attack-column", o.attack_column, "Attack category column, or 'none'");
  command.add_option("--drop-columns", o.drop_columns, "Feature columns to ignore")
      ->delimiter(',')
      ->type_name("COL,...");
  command.add_flag("--lenient", o.lenient, "Skip malformed rows instead of failing");
}

void add_preprocess_flags(CLI::App& command, Options& o) {
  command.add_option("--window", o.preprocess.window, "Window length T")->check(CLI::PositiveNumber);
  command.add_option("--stride", o.preprocess.stride, "Window stride")->check(CLI::PositiveNumber);
  command.add_option("--train-ratio", o.preprocess.ratios.train, "Training share of windows");
  command.add_option("--val-ratio", o.preprocess.ratios.val, "Validation share of windows");
  command.add_option("--test-ratio", o.preprocess.ratios.test, "Test share of windows");
  command
      .add_option("--log1p-columns", o.log1p_columns,
                  "Features scaled as log(1 + x) before min-max, or 'none'")
      ->delimiter(',')
      ->type_name("COL,...");
  command.add_option("--split-mode", o.split_mode, "Window split strategy")
      ->check(CLI::IsMember({"stratified", "block"}));
}

void add_model_flags(CLI::App& command, Options& o) {
  command.add_option("--conv1-filters", o.model.conv1_filters, "Filters in the first conv layer");
  command.add_option("--conv2-filters", o.model.conv2_filters, "Filters in the second conv layer");
  command.add_option("--kernel-size", o.model.kernel_size, "Convolution kernel width");
  command.add_option("--pool-width", o.model.pool_width, "Max-pool width");
  command.add_option("--dropout", o.model.dropout_rate, "Dropout rate before the BiLSTM");
  command.add_option("--lstm-hidden", o.model.lstm_hidden, "Hidden units per LSTM direction");
}

void add_train_flags(CLI::App& command, Options& o) {
  command.add_option("--epochs", o.train.epochs, "Training epochs");
  command.add_option("--batch-size", o.train.batch_size, "Mini-batch size");
  command.add_option("--learning-rate", o.train.learning_rate, "Adam learning rate");
  command.add_option("--beta1", o.train.beta1, "Adam first-moment decay");
  command.add_option("--beta2", o.train.beta2, "Adam second-moment decay");
  command.add_option("--epsilon", o.train.epsilon, "Adam epsilon");
  command.add_option("--class-weighting", o.train.class_weighting,
                     "Inverse-frequency class weights in the loss (true/false)");
  command.add_option("--threshold-step", o.train.threshold_step,
                     "Grid step of the validation threshold search");
}

void add_run_flags(CLI::App& command, Options& o, const std::string& out_help) {
  command.add_option("--seed", o.seed, "Seed for every random choice of the run");
  command.add_option("--threads", o.threads, "Worker threads, 0 = all cores");
  command.add_option("--out", o.out, out_help)->type_name("DIR");
}

// ------------------------------------------------------------ helpers

std::optional<std::string> optional_column(const std::string& name) {
  if (name.empty() || name == "none") return std::nullopt;
  return name;
}

std::vector<std::string> column_list(std::vector<std::string> names) {
  if (names.size() == 1 && names.front() == "none") names.clear();
  return names;
}

FlowSchema schema_of(const Options& o) {
  FlowSchema schema;
  schema.feature_columns = o.features;
  schema.drop_columns = o.drop_columns;
  schema.label_column = o.label_column;
  schema.attack_column = optional_column(o.attack_column);
  schema.validate();
  return schema;
}

// Scoring reads the columns the checkpoint was trained on unless the
// command line names its own.
FlowSchema scoring_schema(const Options& o, const FeatureEncoder& encoder,
                          const CLI::App& command) {
  Options resolved = o;
  if (command.get_option("--features")->count() == 0) {
    resolved.features = encoder.feature_names;
    if (command.get_option("--drop-columns")->count() == 0) resolved.drop_columns.clear();
  }
  return schema_of(resolved);
}

fs::path run_directory(const Options& o) {
  if (!o.out.empty()) return o.out;
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm local{};
  localtime_r(&now, &local);
  char stamp[32];
  std::strftime(stamp, sizeof stamp, "%Y%m%d-%H%M%S", &local);
  return fs::path("runs") / (std::string(stamp) + "-seed" + std::to_string(o.seed));
}

void ensure_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

Checkpoint open_checkpoint(const std::string& path) {
  try {
    return load_checkpoint(path);
  } catch (const CorruptCheckpoint& e) {
    throw CorruptCheckpoint("corrupt checkpoint '" + path + "': " + e.what());
  } catch (const IoError& e) {
    throw CheckpointError(e.what());
  }
}

RawDataset read_flows(const Options& o, const FlowSchema& schema, bool require_label,
                      std::ostream& err) {
  ParseOptions parse;
  parse.strict = !o.lenient;
  parse.require_label = require_label;
  RawDataset dataset = parse_netflow_csv(o.data, schema, parse);
  if (dataset.rejected_rows > 0) {
    err << "skipped " << dataset.rejected_rows << " malformed rows in " << o.data << '\n';
  }
  return dataset;
}

std::string progress_line(const EpochLog& e, int epochs) {
  std::ostringstream line;
  line << "epoch " << e.epoch << '/' << epochs << std::fixed << std::setprecision(6)
       << "  loss " << e.train_loss << std::setprecision(4) << "  val_f1 " << e.val_f1
       << std::setprecision(2) << "  threshold " << e.threshold;
  return line.str();
}

// ------------------------------------------------------------ commands

int cmd_train(Options& o, std::ostream& out, std::ostream& err) {
  const FlowSchema schema = schema_of(o);
  PreprocessConfig preprocess = o.preprocess;
  preprocess.log1p_columns = column_list(o.log1p_columns);
  preprocess.split_mode = o.split_mode == "block" ? SplitMode::block : SplitMode::stratified;
  preprocess.seed = o.seed;
  preprocess.validate();
  ModelConfig model = o.model;
  model.window = preprocess.window;
  model.features = static_cast<int>(schema.effective_features().size());
  model.seed = o.seed;
  model.validate();
  TrainConfig train = o.train;
  train.seed = o.seed;
  train.threads = o.threads;
  train.validate();
  const fs::path dir = run_directory(o);

  const RawDataset dataset = read_flows(o, schema, true, err);
  const PreparedData prepared = prepare_dataset(dataset, preprocess);
  err << "records " << dataset.records.size() << ", windows train " << prepared.splits.train.size()
      << " / val " << prepared.splits.val.size() << " / test " << prepared.splits.test.size()
      << '\n';

  const FitResult fitted = fit(prepared.splits, model, train, [&](const EpochLog& e) {
    err << progress_line(e, train.epochs) << '\n';
  });
  const MetricsReport report =
      evaluate(fitted.best_model, fitted.threshold, prepared.splits.test, train.threads);
  const std::string metrics = report.to_json() + '\n';

  ensure_directory(dir);
  save_checkpoint(Checkpoint{fitted.best_model, prepared.encoder, fitted.threshold},
                  dir / "model.json");
  io::write_file_atomic(dir / "loss_curve.csv", epoch_log_csv(fitted.log));
  io::write_file_atomic(dir / "metrics.json", metrics);

  err << "best epoch " << fitted.best_epoch << ", threshold " << format_real(fitted.threshold)
      << "; wrote " << dir.string() << '\n';
  out << metrics;
  return kOk;
}

std::vector<SequenceWindow> scoring_windows(const Options& o, const Checkpoint& checkpoint,
                                            const CLI::App& command, bool require_label,
                                            std::ostream& err) {
  const FlowSchema schema = scoring_schema(o, checkpoint.encoder, command);
  const RawDataset dataset = read_flows(o, schema, require_label, err);
  return encode_windows(dataset, checkpoint.encoder, checkpoint.model.config().window,
                        o.preprocess.stride);
}

int cmd_evaluate(Options& o, const CLI::App& command, std::ostream& out, std::ostream& err) {
  const Checkpoint checkpoint = open_checkpoint(o.checkpoint);
  const auto windows = scoring_windows(o, checkpoint, command, true, err);
  const std::string metrics = evaluate(checkpoint, windows, o.threads).to_json() + '\n';
  if (!o.out.empty()) {
    ensure_directory(o.out);
    io::write_file_atomic(fs::path(o.out) / "metrics.json", metrics);
  }
  out << metrics;
  return kOk;
}

int cmd_predict(Options& o, const CLI::App& command, std::ostream& err) {
  const Checkpoint checkpoint = open_checkpoint(o.checkpoint);
  const fs::path dir = run_directory(o);
  const auto windows = scoring_windows(o, checkpoint, command, false, err);
  const auto scores = predict_proba(checkpoint.model, windows, o.threads);

  std::string csv = "origin_index,score,predicted_label\n";
  for (std::size_t i = 0; i < windows.size(); ++i) {
    csv += std::to_string(windows[i].origin_index) + ',' + format_real(scores[i]) + ',' +
           (scores[i] >= checkpoint.threshold ? '1' : '0') + '\n';
  }
  ensure_directory(dir);
  io::write_file_atomic(dir / "predictions.csv", csv);
  err << "wrote " << windows.size() << " predictions to " << (dir / "predictions.csv").string()
      << '\n';
  return kOk;
}

int cmd_summarize(Options& o, std::ostream& out, std::ostream& err) {
  const RawDataset dataset = read_flows(o, schema_of(o), true, err);
  out << summarize_labels(dataset).to_json() << '\n';
  return kOk;
}

int cmd_synth(Options& o, std::ostream& err) {
  if (o.out.empty()) throw InvalidConfig("synth needs --out");
  if (!(o.benign_fraction >= 0.0 && o.benign_fraction <= 1.0)) {
    throw InvalidConfig("benign fraction must lie in [0, 1]");
  }
  synthetic::NetflowOptions options;
  options.rows = o.rows;
  options.benign_fraction = o.benign_fraction;
  options.seed = o.synth_seed;
  options.with_labels = !o.unlabeled;
  std::ostringstream csv;
  synthetic::write_netflow_csv(csv, options);
  io::write_file_atomic(o.out, csv.str());
  err << "wrote " << o.rows << " flows to " << o.out << '\n';
  return kOk;
}

int failure(std::ostream& err, ExitCode code, const std::string& message) {
  err << "nids: error: " << message << '\n';
  return code;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"CNN-BiLSTM anomaly detector for NetFlow traffic", "nids"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  CLI::Option* root_config = app.set_config("--config-file")->group("")->configurable(false);
  app.config_formatter(std::make_shared<RunConfigFormat>(app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  Options o;

  CLI::App* train = app.add_subcommand("train", "Preprocess a flow CSV, train, tune and test");
  add_config_flag(*train, root_config);
  add_data_flags(*train, o, true);
  add_preprocess_flags(*train, o);
  add_model_flags(*train, o);
  add_train_flags(*train, o);
  add_run_flags(*train, o, "Output directory (default runs/<timestamp>-seed<seed>)");

  CLI::App* evaluate = app.add_subcommand("evaluate", "Score labeled flows with a checkpoint");
  add_config_flag(*evaluate, root_config);
  evaluate->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->type_name("PATH");
  add_data_flags(*evaluate, o, true);
  evaluate->add_option("--stride", o.preprocess.stride, "Window stride")->check(CLI::PositiveNumber);
  add_run_flags(*evaluate, o, "Also write metrics.json into this directory");

  CLI::App* predict = app.add_subcommand("predict", "Write per-window scores and decisions");
  add_config_flag(*predict, root_config);
  predict->add_option("--checkpoint", o.checkpoint, "Model checkpoint")->required()->type_name("PATH");
  add_data_flags(*predict, o, false);
  predict->add_option("--stride", o.preprocess.stride, "Window stride")->check(CLI::PositiveNumber);
  add_run_flags(*predict, o, "Output directory (default runs/<timestamp>-seed<seed>)");

  CLI::App* summarize = app.add_subcommand("summarize", "Print the label composition of a flow CSV");
  add_config_flag(*summarize, root_config);
  add_data_flags(*summarize, o, true);

  CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic NF-BoT-IoT-layout CSV");
  synth->add_option("--out", o.out, "CSV file to write")->required()->type_name("PATH");
  synth->add_option("--rows", o.rows, "Number of flows");
  synth->add_option("--benign-fraction", o.benign_fraction, "Share of benign flows");
  synth->add_option("--seed", o.synth_seed, "Generator seed");
  synth->add_flag("--unlabeled", o.unlabeled, "Omit the Label and Attack columns");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    return failure(err, kConfigError, e.what());
  }

  try {
    if (train->parsed()) return cmd_train(o, out, err);
    if (evaluate->parsed()) return cmd_evaluate(o, *evaluate, out, err);
    if (predict->parsed()) return cmd_predict(o, *predict, err);
    if (summarize->parsed()) return cmd_summarize(o, out, err);
    return cmd_synth(o, err);
  } catch (const ConfigError& e) {
    return failure(err, kConfigError, e.what());
  } catch (const CheckpointError& e) {
    return failure(err, kConfigError, e.what());
  } catch (const TrainingError& e) {
    return failure(err, kTrainingError, e.what());
  } catch (const DataError& e) {
    return failure(err, kDataError, e.what());
  } catch (const ShapeError& e) {
    return failure(err, kDataError, e.what());
  } catch (const std::exception& e) {
    return failure(err, kTrainingError, e.what());
  }
}

}  // namespace nids::cli
