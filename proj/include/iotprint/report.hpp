#pragma once

// Confusion matrices and the accuracy/precision/recall/F1 arithmetic, plus
// the three report renderings (JSON, aligned text table, CSV).

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace iotprint::report {

// Square count grid; rows are actual classes, columns are predicted.
struct ConfusionMatrix {
  std::vector<std::string> class_names;
  std::vector<uint64_t> counts;  // row-major classes() x classes()

  ConfusionMatrix() = default;
  explicit ConfusionMatrix(std::vector<std::string> names)
      : class_names(std::move(names)), counts(class_names.size() * class_names.size(), 0) {}

  size_t classes() const { return class_names.size(); }
  uint64_t& at(size_t actual, size_t predicted) { return counts[actual * classes() + predicted]; }
  uint64_t at(size_t actual, size_t predicted) const {
    return counts[actual * classes() + predicted];
  }
  void add(size_t actual, size_t predicted, uint64_t n = 1);

  uint64_t row_sum(size_t i) const;
  uint64_t col_sum(size_t i) const;
  uint64_t total() const;
  uint64_t trace() const;

  bool operator==(const ConfusionMatrix&) const = default;
};

struct Metrics {
  uint64_t tp = 0, tn = 0, fp = 0, fn = 0;
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;

  uint64_t support() const { return tp + fn; }
};

// TP = cm[i][i]; FN = row sum - TP; FP = column sum - TP; TN = rest.
// A = (TP+TN)/total, P = TP/(TP+FP), R = TP/(TP+FN), F1 = 2PR/(P+R);
// any ratio with a zero denominator is reported as 0.
Metrics per_class_metrics(const ConfusionMatrix& cm, size_t i);
std::vector<Metrics> all_class_metrics(const ConfusionMatrix& cm);

struct WeightedAverages {
  double accuracy = 0.0, precision = 0.0, recall = 0.0, f1 = 0.0;
};

// Averages weighted by actual-class support (row sums).
WeightedAverages weighted_average(const ConfusionMatrix& cm, std::span<const Metrics> per_class);

// trace/total; zero total is an error.
double overall_accuracy(const ConfusionMatrix& cm);

// Aligned text: the count grid followed by a per-class metric block and the
// weighted-average row.
std::string render_table(const ConfusionMatrix& cm);

std::string confusion_csv(const ConfusionMatrix& cm);

// Versioned metrics object: matrix, per-class metrics, weighted averages,
// overall accuracy.
nlohmann::json metrics_json(const ConfusionMatrix& cm);

// Writes report.json (extra fields plus "metrics"), report.txt and
// confusion.csv into dir. `extra` carries run context: seeds, thresholds,
// epoch history, config.
void emit_report(const ConfusionMatrix& cm, const std::filesystem::path& dir,
                 const nlohmann::json& extra);

}  // namespace iotprint::report
