#pragma once

// Batch commands behind the CLI: split captures into sessions, encode
// sessions into a dataset, train/evaluate models, screen fingerprints
// against a threshold profile. Each command is a pure function of its
// options so tests can drive it without spawning a process.

#include <cstdint>
#include <string>
#include <vector>

#include "iotprint/classify.hpp"
#include "iotprint/dataset.hpp"

namespace iotprint::pipe {

struct SplitOptions {
  std::vector<std::string> inputs;  // classic pcap files
  std::string out_dir;
  std::string mac_map_path;  // optional; sessions label to the raw MAC without it
  bool emit_pcaps = false;   // also write one pcap per session
};

struct SplitSummary {
  uint64_t frames = 0;
  uint64_t sessions = 0;
  uint64_t discarded_flows = 0;  // non-TCP flows
  uint64_t skipped_frames = 0;
};

// Writes sessions.json plus payloads/<id>.bin (and sessions/<id>.pcap with
// emit_pcaps) under out_dir. Reruns with identical inputs produce identical
// bytes.
SplitSummary cmd_split(const SplitOptions& options);

struct EncodeOptions {
  std::string sessions_dir;  // cmd_split output directory
  std::string out_dir;
  bool images = false;                    // dump 28x28 PGM files per row
  size_t min_sessions = 1000;             // keep labels with count > min_sessions
  std::vector<std::string> drop_labels;   // removed before filtering
  std::vector<std::string> label_order;   // optional; must cover kept labels
};

struct EncodeSummary {
  size_t labels = 0;
  size_t rows = 0;
  size_t duplicates_dropped = 0;
  size_t empty_dropped = 0;
};

// Per kept label: load payloads, dedupe, normalize to 784 bytes; write the
// IDX pair + manifest into out_dir. Zero usable rows is an error.
EncodeSummary cmd_encode(const EncodeOptions& options);

struct TrainOptions {
  std::string dataset_dir;  // cmd_encode output directory
  std::string out_dir;
  int experiment = 1;          // 1 = identify, 2 = hold-one-out + threshold
  std::string exclude_label;   // experiment 2 only
  std::vector<std::string> drop_labels;  // removed before splitting
  data::SplitPolicy split;     // fractions + seed
  cls::ExperimentConfig config;
};

struct TrainSummary {
  size_t epochs_used = 0;
  double test_accuracy = 0.0;
  double threshold = 0.0;  // experiment 2 only
};

// Splits the dataset, runs the selected experiment, and writes model.json,
// history.csv, report.{json,txt}, confusion.csv, manifest.json (and
// profile.json / search_history.csv for experiment 2 / when searching).
TrainSummary cmd_train(const TrainOptions& options);

struct EvalOptions {
  std::string model_path;
  std::string dataset_dir;
  std::string out_dir;
  size_t batch_size = 100;
};

struct EvalSummary {
  double accuracy = 0.0;
  double loss = 0.0;
};

EvalSummary cmd_eval(const EvalOptions& options);

struct DetectOptions {
  std::string model_path;
  std::string profile_path;
  std::vector<std::string> inputs;  // payload .bin files and/or dataset dirs
  std::string out_path;             // verdicts.json
};

struct DetectSummary {
  size_t known = 0;
  size_t unknown = 0;
};

// Applies the profile's threshold rule to every input fingerprint; raw
// payload files are normalized to 784 bytes first. Writes verdicts JSON.
DetectSummary cmd_detect_unknown(const DetectOptions& options);

}  // namespace iotprint::pipe
