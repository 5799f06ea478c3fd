// Subcommand front end: split / encode / train / eval / detect-unknown.
// Exit codes: 0 success, 1 usage or config error, 2 data/format error.

#include <cstdio>
#include <exception>
#include <fstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "iotprint/errors.hpp"
#include "iotprint/pipeline.hpp"

namespace {

using iotprint::ConfigError;
using iotprint::FormatError;
using json = nlohmann::json;

// Config-file values fill in only where the corresponding flag was not given
// on the command line.
void apply_train_config(const std::string& path, CLI::App* cmd, iotprint::pipe::TrainOptions& t,
                        bool seed_flag_given) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": invalid config JSON: " + std::string(e.what()));
  }
  if (!doc.is_object()) throw ConfigError(path + ": config must be a JSON object");

  const auto unset = [cmd](const char* flag) { return cmd->count(flag) == 0; };
  try {
    if (doc.contains("dataset") && unset("--dataset")) t.dataset_dir = doc["dataset"];
    if (doc.contains("out") && unset("--out")) t.out_dir = doc["out"];
    if (doc.contains("experiment") && unset("--experiment")) t.experiment = doc["experiment"];
    if (doc.contains("exclude_label") && unset("--exclude")) {
      t.exclude_label = doc["exclude_label"];
    }
    if (doc.contains("drop_labels") && unset("--drop")) {
      t.drop_labels = doc["drop_labels"].get<std::vector<std::string>>();
    }
    if (doc.contains("epochs") && unset("--epochs")) t.config.epochs = doc["epochs"];
    if (doc.contains("epoch_search") && unset("--epoch-search")) {
      t.config.epoch_search = doc["epoch_search"];
    }
    if (doc.contains("batch_size") && unset("--batch-size")) {
      t.config.batch_size = doc["batch_size"];
    }
    if (doc.contains("hidden_width") && unset("--hidden")) {
      t.config.hidden_width = doc["hidden_width"];
    }
    if (doc.contains("threshold_grid_step") && unset("--threshold-grid-step")) {
      t.config.threshold_grid_step = doc["threshold_grid_step"];
    }
    if (doc.contains("strict_class_count") && unset("--strict")) {
      t.config.strict_class_count = doc["strict_class_count"];
    }
    if (doc.contains("init")) {
      const json& init = doc["init"];
      if (init.contains("mean")) t.config.init.mean = init["mean"];
      if (init.contains("stddev") && unset("--stddev")) t.config.init.stddev = init["stddev"];
      if (init.contains("seed") && !seed_flag_given) t.config.init.seed = init["seed"];
    }
    if (doc.contains("adam")) {
      const json& adam = doc["adam"];
      if (adam.contains("learning_rate") && unset("--lr")) {
        t.config.adam.learning_rate = adam["learning_rate"];
      }
      if (adam.contains("beta1")) t.config.adam.beta1 = adam["beta1"];
      if (adam.contains("beta2")) t.config.adam.beta2 = adam["beta2"];
      if (adam.contains("epsilon")) t.config.adam.epsilon = adam["epsilon"];
    }
    if (doc.contains("shuffle_seed") && !seed_flag_given) {
      t.config.shuffle_seed = doc["shuffle_seed"];
    }
    if (doc.contains("split")) {
      const json& split = doc["split"];
      if (split.contains("validation_fraction") && unset("--val-fraction")) {
        t.split.validation_fraction = split["validation_fraction"];
      }
      if (split.contains("test_fraction") && unset("--test-fraction")) {
        t.split.test_fraction = split["test_fraction"];
      }
      if (split.contains("seed") && !seed_flag_given) t.split.rng_seed = split["seed"];
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": bad config value: " + std::string(e.what()));
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IoT device fingerprinting toolkit: TCP-session fingerprints, "
               "MNIST-style datasets, dense-network device identification"};
  app.require_subcommand(1);

  iotprint::pipe::SplitOptions split_opts;
  CLI::App* split = app.add_subcommand("split", "Split pcap captures into TCP sessions");
  split->add_option("inputs", split_opts.inputs, "classic pcap files")
      ->required()
      ->check(CLI::ExistingFile);
  split->add_option("--out", split_opts.out_dir, "output directory")->required();
  split->add_option("--mac-map", split_opts.mac_map_path, "JSON object of MAC -> device label")
      ->check(CLI::ExistingFile);
  split->add_flag("--pcaps", split_opts.emit_pcaps, "also write one pcap file per session");

  iotprint::pipe::EncodeOptions encode_opts;
  CLI::App* encode = app.add_subcommand("encode", "Build an IDX dataset from split sessions");
  encode->add_option("--sessions", encode_opts.sessions_dir, "directory written by split")
      ->required()
      ->check(CLI::ExistingDirectory);
  encode->add_option("--out", encode_opts.out_dir, "output dataset directory")->required();
  encode->add_flag("--images", encode_opts.images, "dump each row as a 28x28 PGM image");
  encode
      ->add_option("--min-sessions", encode_opts.min_sessions,
                   "keep labels with strictly more sessions than this")
      ->capture_default_str();
  encode->add_option("--drop", encode_opts.drop_labels, "drop these labels before filtering");
  encode->add_option("--label-order", encode_opts.label_order,
                     "explicit class order (must cover every kept label)");

  iotprint::pipe::TrainOptions train_opts;
  std::string train_config_path;
  uint64_t master_seed = 0;
  CLI::App* train = app.add_subcommand("train", "Train and score a device classifier");
  train->add_option("--dataset", train_opts.dataset_dir, "dataset directory from encode");
  train->add_option("--out", train_opts.out_dir, "output directory");
  train->add_option("--config", train_config_path, "JSON config file (flags win)")
      ->check(CLI::ExistingFile);
  train->add_option("--experiment", train_opts.experiment, "1 = identify, 2 = hold-one-out")
      ->check(CLI::Range(1, 2))
      ->capture_default_str();
  train->add_option("--exclude", train_opts.exclude_label,
                    "label held out as unknown (experiment 2)");
  train->add_option("--drop", train_opts.drop_labels, "labels removed before splitting");
  train->add_option("--seed", master_seed,
                    "master seed: split=seed, init=seed+1, shuffle=seed+2");
  train->add_option("--epochs", train_opts.config.epochs, "final training epochs")
      ->capture_default_str();
  train->add_option("--epoch-search", train_opts.config.epoch_search,
                    "probe-pass length for epoch selection (0 = off)")
      ->capture_default_str();
  train->add_option("--batch-size", train_opts.config.batch_size, "mini-batch size")
      ->capture_default_str();
  train->add_option("--hidden", train_opts.config.hidden_width, "hidden layer width")
      ->capture_default_str();
  train->add_option("--stddev", train_opts.config.init.stddev, "init weight stddev")
      ->capture_default_str();
  train->add_option("--lr", train_opts.config.adam.learning_rate, "Adam learning rate")
      ->capture_default_str();
  train->add_option("--val-fraction", train_opts.split.validation_fraction,
                    "validation split fraction")
      ->capture_default_str();
  train->add_option("--test-fraction", train_opts.split.test_fraction, "test split fraction")
      ->capture_default_str();
  train->add_option("--threshold-grid-step", train_opts.config.threshold_grid_step,
                    "rejection-threshold grid step (experiment 2)")
      ->capture_default_str();
  train->add_flag("--strict", train_opts.config.strict_class_count,
                  "require exactly 10 classes (experiment 1)");

  iotprint::pipe::EvalOptions eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "Score a saved model on a dataset");
  eval->add_option("--model", eval_opts.model_path, "model.json path")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--dataset", eval_opts.dataset_dir, "dataset directory")
      ->required()
      ->check(CLI::ExistingDirectory);
  eval->add_option("--out", eval_opts.out_dir, "output directory")->required();
  eval->add_option("--batch-size", eval_opts.batch_size, "inference batch size")
      ->capture_default_str();

  iotprint::pipe::DetectOptions detect_opts;
  CLI::App* detect =
      app.add_subcommand("detect-unknown", "Screen fingerprints with a threshold profile");
  detect->add_option("--model", detect_opts.model_path, "model.json path")
      ->required()
      ->check(CLI::ExistingFile);
  detect->add_option("--profile", detect_opts.profile_path, "profile.json path")
      ->required()
      ->check(CLI::ExistingFile);
  detect->add_option("--out", detect_opts.out_path, "verdicts JSON path")->required();
  detect->add_option("inputs", detect_opts.inputs, "payload .bin files or dataset directories")
      ->required()
      ->check(CLI::ExistingPath);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;  // usage problems are exit 1
  }

  try {
    if (split->parsed()) {
      const auto summary = iotprint::pipe::cmd_split(split_opts);
      std::printf("sessions: %llu (non-tcp flows discarded: %llu, frames skipped: %llu)\n",
                  static_cast<unsigned long long>(summary.sessions),
                  static_cast<unsigned long long>(summary.discarded_flows),
                  static_cast<unsigned long long>(summary.skipped_frames));
    } else if (encode->parsed()) {
      const auto summary = iotprint::pipe::cmd_encode(encode_opts);
      std::printf("rows: %zu over %zu label(s) (duplicates dropped: %zu, empty dropped: %zu)\n",
                  summary.rows, summary.labels, summary.duplicates_dropped,
                  summary.empty_dropped);
    } else if (train->parsed()) {
      if (train->count("--seed") != 0) {
        train_opts.split.rng_seed = master_seed;
        train_opts.config.init.seed = master_seed + 1;
        train_opts.config.shuffle_seed = master_seed + 2;
      }
      if (!train_config_path.empty()) {
        apply_train_config(train_config_path, train, train_opts, train->count("--seed") != 0);
      }
      if (train_opts.dataset_dir.empty()) throw ConfigError("train: --dataset required");
      if (train_opts.out_dir.empty()) throw ConfigError("train: --out required");
      const auto summary = iotprint::pipe::cmd_train(train_opts);
      if (train_opts.experiment == 2) {
        std::printf("epochs: %zu, threshold: %.2f, test decision accuracy: %.4f\n",
                    summary.epochs_used, summary.threshold, summary.test_accuracy);
      } else {
        std::printf("epochs: %zu, test accuracy: %.4f\n", summary.epochs_used,
                    summary.test_accuracy);
      }
    } else if (eval->parsed()) {
      const auto summary = iotprint::pipe::cmd_eval(eval_opts);
      std::printf("accuracy: %.4f, loss: %.6f\n", summary.accuracy, summary.loss);
    } else if (detect->parsed()) {
      const auto summary = iotprint::pipe::cmd_detect_unknown(detect_opts);
      std::printf("known: %zu, unknown: %zu\n", summary.known, summary.unknown);
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const FormatError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
