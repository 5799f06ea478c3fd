#include "iotprint/classify.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "iotprint/errors.hpp"
#include "iotprint/fingerprint.hpp"
#include "iotprint/log.hpp"

namespace iotprint::cls {

using json = nlohmann::json;

void save_profile(const ThresholdProfile& profile, const std::filesystem::path& path) {
  if (!(profile.threshold > 0.0 && profile.threshold < 1.0)) {
    throw ConfigError("profile threshold must lie strictly inside (0,1)");
  }
  json doc;
  doc["schema_version"] = 1;
  doc["excluded_label"] = profile.excluded_label;
  doc["threshold"] = profile.threshold;
  doc["epochs"] = profile.epochs;
  doc["model_ref"] = profile.model_ref;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << doc.dump(2) << '\n';
  if (!out) throw ConfigError("write failed: " + path.string());
}

ThresholdProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open profile: " + path.string());
  try {
    const json doc = json::parse(in);
    if (doc.at("schema_version").get<int>() != 1) {
      throw FormatError(path.string() + ": unsupported profile schema version");
    }
    ThresholdProfile profile;
    profile.excluded_label = doc.at("excluded_label").get<std::string>();
    profile.threshold = doc.at("threshold").get<double>();
    profile.epochs = doc.at("epochs").get<size_t>();
    profile.model_ref = doc.at("model_ref").get<std::string>();
    if (!(profile.threshold > 0.0 && profile.threshold < 1.0)) {
      throw FormatError(path.string() + ": threshold outside (0,1)");
    }
    return profile;
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid profile JSON: " + e.what());
  }
}

Verdict verdict_from_probs(std::span<const double> probs, double tau) {
  if (probs.empty()) throw ConfigError("verdict_from_probs: empty probability vector");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("threshold must lie strictly inside (0,1)");
  Verdict v;
  v.posterior.assign(probs.begin(), probs.end());
  const size_t best = nn::argmax_row(probs.data(), probs.size());
  v.max_prob = probs[best];
  v.known = v.max_prob > tau;
  v.class_index = best;
  return v;
}

Verdict classify_with_threshold(const nn::MlpModel& model, std::span<const uint8_t> fingerprint,
                                double tau) {
  if (fingerprint.size() != model.input_width) {
    throw ConfigError("fingerprint width " + std::to_string(fingerprint.size()) +
                      " does not match model input width " + std::to_string(model.input_width));
  }
  nn::Matrix x(1, fingerprint.size());
  for (size_t i = 0; i < fingerprint.size(); ++i) {
    x.at(0, i) = static_cast<double>(fingerprint[i]) / 255.0;
  }
  const nn::Matrix probs = nn::forward(model, x);
  return verdict_from_probs({probs.row(0), probs.cols()}, tau);
}

size_t select_epochs(std::span<const nn::EpochStats> history) {
  if (history.empty()) throw ConfigError("select_epochs: empty history");
  size_t best = 0;
  for (size_t i = 1; i < history.size(); ++i) {
    if (history[i].val_accuracy > history[best].val_accuracy ||
        (history[i].val_accuracy == history[best].val_accuracy &&
         history[i].val_loss < history[best].val_loss)) {
      best = i;
    }
  }
  return best + 1;
}

ThresholdSearch derive_threshold(const nn::Matrix& probs, std::span<const size_t> truth,
                                 double grid_step) {
  if (probs.rows() == 0 || probs.cols() == 0) {
    throw ConfigError("derive_threshold: empty probability matrix");
  }
  if (probs.rows() != truth.size()) {
    throw ConfigError("derive_threshold: probability/truth row count mismatch");
  }
  if (!(grid_step > 0.0 && grid_step < 1.0)) {
    throw ConfigError("derive_threshold: grid step must lie strictly inside (0,1)");
  }
  if (std::find(truth.begin(), truth.end(), kUnknownTruth) == truth.end()) {
    throw ConfigError("derive_threshold: validation set contains no unknown instances");
  }
  for (const size_t t : truth) {
    if (t != kUnknownTruth && t >= probs.cols()) {
      throw ConfigError("derive_threshold: truth class out of range");
    }
  }

  std::vector<double> max_p(probs.rows());
  std::vector<size_t> arg(probs.rows());
  for (size_t r = 0; r < probs.rows(); ++r) {
    arg[r] = nn::argmax_row(probs.row(r), probs.cols());
    max_p[r] = probs.at(r, arg[r]);
  }

  ThresholdSearch best{0.0, -1.0};
  for (size_t i = 1;; ++i) {
    const double tau = static_cast<double>(i) * grid_step;
    if (!(tau < 1.0)) break;
    size_t correct = 0;
    for (size_t r = 0; r < probs.rows(); ++r) {
      const bool known = max_p[r] > tau;
      if (known ? (truth[r] == arg[r]) : (truth[r] == kUnknownTruth)) ++correct;
    }
    const double acc = static_cast<double>(correct) / static_cast<double>(probs.rows());
    if (acc >= best.accuracy) best = {tau, acc};  // >= so ties take the larger tau
  }
  return best;
}

void validate_bundle(const DatasetBundle& bundle) {
  if (bundle.train.label_names.empty()) throw ConfigError("bundle has no label names");
  if (bundle.validation.label_names != bundle.train.label_names ||
      bundle.test.label_names != bundle.train.label_names) {
    throw ConfigError("bundle splits disagree on label names");
  }
  const size_t c = bundle.train.label_names.size();
  for (const data::LabeledDataset* set : {&bundle.train, &bundle.validation, &bundle.test}) {
    for (uint8_t label : set->labels) {
      if (label >= c) throw ConfigError("bundle label out of range");
    }
  }
}

namespace {

nn::TrainingConfig training_config(const ExperimentConfig& config, size_t epochs) {
  nn::TrainingConfig tc;
  tc.epochs = epochs;
  tc.batch_size = config.batch_size;
  tc.shuffle_seed = config.shuffle_seed;
  tc.adam = config.adam;
  return tc;
}

nn::MlpModel fresh_model(const ExperimentConfig& config, size_t class_count,
                         std::vector<std::string> label_names) {
  if (config.hidden_width == 0) throw ConfigError("hidden width must be >= 1");
  nn::MlpModel model =
      nn::init_model(fp::kFingerprintBytes, {config.hidden_width}, class_count, config.init);
  model.label_names = std::move(label_names);
  return model;
}

// Probe pass + select_epochs when a search is requested, else config.epochs.
size_t choose_epochs(const ExperimentConfig& config, const data::LabeledDataset& train_set,
                     const data::LabeledDataset& val_set, size_t class_count,
                     const std::vector<std::string>& names,
                     std::vector<nn::EpochStats>& search_history) {
  search_history.clear();
  if (config.epoch_search == 0) return config.epochs;
  nn::MlpModel probe = fresh_model(config, class_count, names);
  const nn::TrainResult probe_run =
      nn::train(probe, train_set, val_set, training_config(config, config.epoch_search));
  search_history = probe_run.history;
  const size_t chosen = select_epochs(search_history);
  log::info("epoch search: best of ", config.epoch_search, " is ", chosen);
  return chosen;
}

// Rows of `src` whose label passes `keep`, relabeled through `relabel`.
data::LabeledDataset filter_rows(const data::LabeledDataset& src,
                                 std::vector<std::string> new_names, auto keep, auto relabel) {
  data::LabeledDataset out;
  out.label_names = std::move(new_names);
  out.split_tag = src.split_tag;
  for (size_t i = 0; i < src.size(); ++i) {
    if (keep(src.labels[i])) {
      out.append_row(src.row(i), static_cast<uint8_t>(relabel(src.labels[i])));
    }
  }
  return out;
}

}  // namespace

Experiment1Result run_experiment1(const DatasetBundle& bundle, const ExperimentConfig& config) {
  validate_bundle(bundle);
  const std::vector<std::string>& names = bundle.train.label_names;
  if (config.strict_class_count && names.size() != 10) {
    throw ConfigError("strict mode expects exactly 10 classes, got " +
                      std::to_string(names.size()));
  }

  Experiment1Result result;
  result.epochs_used = choose_epochs(config, bundle.train, bundle.validation, names.size(),
                                     names, result.search_history);

  result.model = fresh_model(config, names.size(), names);
  const nn::TrainResult run = nn::train(result.model, bundle.train, bundle.validation,
                                        training_config(config, result.epochs_used));
  result.history = run.history;

  const nn::EvalResult eval = nn::evaluate(result.model, bundle.test, config.batch_size);
  result.test_accuracy = eval.accuracy;
  result.test_loss = eval.loss;
  result.test_matrix = report::ConfusionMatrix(names);
  for (size_t i = 0; i < bundle.test.size(); ++i) {
    result.test_matrix.add(bundle.test.labels[i], eval.predictions[i]);
  }
  return result;
}

Experiment2Result run_experiment2(const DatasetBundle& bundle, const std::string& excluded_label,
                                  const ExperimentConfig& config) {
  validate_bundle(bundle);
  const std::vector<std::string>& names = bundle.train.label_names;
  const auto it = std::find(names.begin(), names.end(), excluded_label);
  if (it == names.end()) {
    throw ConfigError("excluded label not in dataset: " + excluded_label);
  }
  if (names.size() < 2) throw ConfigError("hold-one-out needs at least 2 classes");

  Experiment2Result result;
  const size_t excluded = static_cast<size_t>(it - names.begin());
  result.excluded_index = excluded;

  std::vector<std::string> known_names;
  for (size_t i = 0; i < names.size(); ++i) {
    if (i != excluded) known_names.push_back(names[i]);
  }
  const auto is_known = [excluded](uint8_t label) { return label != excluded; };
  const auto to_known = [excluded](uint8_t label) { return label - (label > excluded ? 1 : 0); };
  const auto to_original = [excluded](size_t known) { return known + (known >= excluded ? 1 : 0); };

  const data::LabeledDataset train8 = filter_rows(bundle.train, known_names, is_known, to_known);
  const data::LabeledDataset val8 =
      filter_rows(bundle.validation, known_names, is_known, to_known);
  if (train8.size() == 0) throw ConfigError("no training rows left after exclusion");

  // Label hygiene: nothing fingerprint-identical to an excluded-class row may
  // be trained on.
  std::set<fp::Digest> excluded_digests;
  for (const data::LabeledDataset* set : {&bundle.train, &bundle.validation, &bundle.test}) {
    for (size_t i = 0; i < set->size(); ++i) {
      if (set->labels[i] == excluded) excluded_digests.insert(fp::sha256(set->row(i)));
    }
  }
  for (size_t i = 0; i < train8.size(); ++i) {
    if (excluded_digests.contains(fp::sha256(train8.row(i)))) {
      throw FormatError("excluded-class fingerprint present in training data (row " +
                        std::to_string(i) + ")");
    }
  }

  result.epochs_used = choose_epochs(config, train8, val8, known_names.size(), known_names,
                                     result.search_history);

  result.model = fresh_model(config, known_names.size(), known_names);
  const nn::TrainResult run =
      nn::train(result.model, train8, val8, training_config(config, result.epochs_used));
  result.history = run.history;

  // Threshold from the validation split: knowns keep their class, held-out
  // rows are the unknowns.
  data::LabeledDataset val_eval = val8;
  std::vector<size_t> val_truth(val8.size());
  for (size_t i = 0; i < val8.size(); ++i) val_truth[i] = val8.labels[i];
  for (size_t i = 0; i < bundle.validation.size(); ++i) {
    if (bundle.validation.labels[i] == excluded) {
      val_eval.append_row(bundle.validation.row(i), 0);
      val_truth.push_back(kUnknownTruth);
    }
  }
  const nn::Matrix val_probs = nn::predict_probs(result.model, val_eval, config.batch_size);
  result.threshold_search = derive_threshold(val_probs, val_truth, config.threshold_grid_step);

  result.profile.excluded_label = excluded_label;
  result.profile.threshold = result.threshold_search.threshold;
  result.profile.epochs = result.epochs_used;

  // Test-set decision matrix in the bundle's label order, with the excluded
  // slot renamed: its row holds the held-out device, its column the verdicts
  // rejected as unknown.
  std::vector<std::string> axis = names;
  axis[excluded] = kUnknownLabel;
  result.test_matrix = report::ConfusionMatrix(axis);

  data::LabeledDataset test_eval;
  test_eval.label_names = known_names;
  std::vector<size_t> test_slot(bundle.test.size());
  for (size_t i = 0; i < bundle.test.size(); ++i) {
    test_eval.append_row(bundle.test.row(i), 0);
    test_slot[i] = bundle.test.labels[i];
  }
  const nn::Matrix test_probs = nn::predict_probs(result.model, test_eval, config.batch_size);
  size_t correct = 0;
  for (size_t i = 0; i < test_eval.size(); ++i) {
    const size_t actual = test_slot[i];
    const size_t pick = nn::argmax_row(test_probs.row(i), test_probs.cols());
    const bool known = test_probs.at(i, pick) > result.profile.threshold;
    const size_t predicted = known ? to_original(pick) : excluded;
    result.test_matrix.add(actual, predicted);
    if (predicted == actual) ++correct;
  }
  result.test_accuracy =
      test_eval.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(test_eval.size());
  return result;
}

}  // namespace iotprint::cls
