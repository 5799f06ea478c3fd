#pragma once

// Experiment drivers: known-device identification over the full label set,
// and held-one-out training with softmax-threshold rejection of the
// held-out ("unknown") device.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "iotprint/dataset.hpp"
#include "iotprint/neuralnet.hpp"
#include "iotprint/report.hpp"

namespace iotprint::cls {

// Canonical axis name for rejected instances in reports.
inline constexpr const char* kUnknownLabel = "unknown";

struct ThresholdProfile {
  std::string excluded_label;
  double threshold = 0.0;  // strictly inside (0,1)
  size_t epochs = 0;
  std::string model_ref;  // file the paired model was saved to
};

void save_profile(const ThresholdProfile& profile, const std::filesystem::path& path);
ThresholdProfile load_profile(const std::filesystem::path& path);

struct Verdict {
  bool known = false;
  size_t class_index = 0;  // meaningful only when known
  std::vector<double> posterior;
  double max_prob = 0.0;
};

// max(p) > tau -> Known(argmax p), lowest index on ties; otherwise Unknown.
Verdict verdict_from_probs(std::span<const double> probs, double tau);
Verdict classify_with_threshold(const nn::MlpModel& model, std::span<const uint8_t> fingerprint,
                                double tau);

// 1-based epoch with the highest validation accuracy; ties broken by lowest
// validation loss, then by the earliest epoch.
size_t select_epochs(std::span<const nn::EpochStats> history);

// Truth value for rows whose correct decision is "unknown".
inline constexpr size_t kUnknownTruth = static_cast<size_t>(-1);

struct ThresholdSearch {
  double threshold = 0.0;
  double accuracy = 0.0;  // decision accuracy achieved at `threshold`
};

// Sweeps tau over {step, 2*step, ...} strictly below 1 and returns the value
// maximizing decision accuracy against `truth` (class index or
// kUnknownTruth); ties go to the larger tau. Requires at least one unknown
// row, otherwise any tau above the max prob would be vacuously optimal.
ThresholdSearch derive_threshold(const nn::Matrix& probs, std::span<const size_t> truth,
                                 double grid_step = 0.01);

struct DatasetBundle {
  data::LabeledDataset train;
  data::LabeledDataset validation;
  data::LabeledDataset test;
};

// Shared label space across the three splits; throws otherwise.
void validate_bundle(const DatasetBundle& bundle);

struct ExperimentConfig {
  size_t epochs = 7;        // final pass length when the search is skipped
  size_t epoch_search = 0;  // probe pass length; 0 skips epoch selection
  size_t batch_size = 100;
  size_t hidden_width = 784;
  nn::InitSpec init;  // same seed re-used for the probe and the final model
  nn::AdamParams adam;
  uint64_t shuffle_seed = 1;
  double threshold_grid_step = 0.01;
  bool strict_class_count = false;  // experiment 1: require exactly 10 classes
};

struct Experiment1Result {
  nn::MlpModel model;
  size_t epochs_used = 0;
  std::vector<nn::EpochStats> search_history;  // empty when search skipped
  std::vector<nn::EpochStats> history;         // final training pass
  report::ConfusionMatrix test_matrix;
  double test_accuracy = 0.0;
  double test_loss = 0.0;
};

// Trains on every class in the bundle. With epoch_search > 0, a probe model
// (same init seed) is trained first and select_epochs picks the final epoch
// count; otherwise config.epochs is used as-is.
Experiment1Result run_experiment1(const DatasetBundle& bundle, const ExperimentConfig& config);

struct Experiment2Result {
  nn::MlpModel model;  // trained without the excluded class
  ThresholdProfile profile;
  size_t epochs_used = 0;
  size_t excluded_index = 0;  // slot of the excluded label in the bundle order
  std::vector<nn::EpochStats> search_history;
  std::vector<nn::EpochStats> history;
  ThresholdSearch threshold_search;      // validation-set decision accuracy
  report::ConfusionMatrix test_matrix;   // full-width, unknown at the excluded slot
  double test_accuracy = 0.0;            // decision accuracy incl. unknown
};

// Holds out excluded_label: trains on the remaining classes (epoch count via
// select_epochs when epoch_search > 0), derives tau on the validation split
// (held-out rows relabeled unknown), then scores the test split. The reported
// matrix keeps the bundle's label order with the excluded slot renamed to
// kUnknownLabel.
Experiment2Result run_experiment2(const DatasetBundle& bundle, const std::string& excluded_label,
                                  const ExperimentConfig& config);

}  // namespace iotprint::cls
