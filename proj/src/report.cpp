#include "iotprint/report.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "iotprint/errors.hpp"

namespace iotprint::report {

using json = nlohmann::json;

void ConfusionMatrix::add(size_t actual, size_t predicted, uint64_t n) {
  if (actual >= classes() || predicted >= classes()) {
    throw ConfigError("confusion matrix index out of range");
  }
  at(actual, predicted) += n;
}

uint64_t ConfusionMatrix::row_sum(size_t i) const {
  uint64_t sum = 0;
  for (size_t j = 0; j < classes(); ++j) sum += at(i, j);
  return sum;
}

uint64_t ConfusionMatrix::col_sum(size_t i) const {
  uint64_t sum = 0;
  for (size_t j = 0; j < classes(); ++j) sum += at(j, i);
  return sum;
}

uint64_t ConfusionMatrix::total() const {
  return std::accumulate(counts.begin(), counts.end(), uint64_t{0});
}

uint64_t ConfusionMatrix::trace() const {
  uint64_t sum = 0;
  for (size_t i = 0; i < classes(); ++i) sum += at(i, i);
  return sum;
}

namespace {

double ratio(uint64_t num, uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

Metrics per_class_metrics(const ConfusionMatrix& cm, size_t i) {
  if (i >= cm.classes()) throw ConfigError("per_class_metrics: class index out of range");
  Metrics m;
  m.tp = cm.at(i, i);
  m.fn = cm.row_sum(i) - m.tp;
  m.fp = cm.col_sum(i) - m.tp;
  m.tn = cm.total() - m.tp - m.fn - m.fp;
  m.accuracy = ratio(m.tp + m.tn, m.tp + m.tn + m.fp + m.fn);
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.f1 = (m.precision + m.recall) > 0.0
             ? 2.0 * m.precision * m.recall / (m.precision + m.recall)
             : 0.0;
  return m;
}

std::vector<Metrics> all_class_metrics(const ConfusionMatrix& cm) {
  std::vector<Metrics> out;
  out.reserve(cm.classes());
  for (size_t i = 0; i < cm.classes(); ++i) out.push_back(per_class_metrics(cm, i));
  return out;
}

WeightedAverages weighted_average(const ConfusionMatrix& cm, std::span<const Metrics> per_class) {
  if (cm.classes() == 0) throw ConfigError("weighted_average: empty confusion matrix");
  if (per_class.size() != cm.classes()) {
    throw ConfigError("weighted_average: metrics/class count mismatch");
  }
  WeightedAverages avg;
  double weight_sum = 0.0;
  for (size_t i = 0; i < cm.classes(); ++i) {
    const double w = static_cast<double>(cm.row_sum(i));
    weight_sum += w;
    avg.accuracy += w * per_class[i].accuracy;
    avg.precision += w * per_class[i].precision;
    avg.recall += w * per_class[i].recall;
    avg.f1 += w * per_class[i].f1;
  }
  if (weight_sum > 0.0) {
    avg.accuracy /= weight_sum;
    avg.precision /= weight_sum;
    avg.recall /= weight_sum;
    avg.f1 /= weight_sum;
  }
  return avg;
}

double overall_accuracy(const ConfusionMatrix& cm) {
  const uint64_t total = cm.total();
  if (total == 0) throw ConfigError("overall_accuracy: matrix has zero total");
  return static_cast<double>(cm.trace()) / static_cast<double>(total);
}

namespace {

std::string pad_left(const std::string& s, size_t width) {
  return s.size() >= width ? s : std::string(width - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

std::string render_table(const ConfusionMatrix& cm) {
  if (cm.classes() == 0) throw ConfigError("render_table: empty confusion matrix");
  const size_t c = cm.classes();

  size_t name_w = std::string("weighted avg").size();
  for (const std::string& n : cm.class_names) name_w = std::max(name_w, n.size());

  std::vector<size_t> col_w(c);
  for (size_t j = 0; j < c; ++j) {
    size_t w = cm.class_names[j].size();
    for (size_t i = 0; i < c; ++i) w = std::max(w, std::to_string(cm.at(i, j)).size());
    col_w[j] = w;
  }

  std::string out = "rows = actual, columns = predicted\n\n";
  out += std::string(name_w, ' ');
  for (size_t j = 0; j < c; ++j) {
    out += "  " + pad_left(cm.class_names[j], col_w[j]);
  }
  out += '\n';
  for (size_t i = 0; i < c; ++i) {
    out += pad_right(cm.class_names[i], name_w);
    for (size_t j = 0; j < c; ++j) {
      out += "  " + pad_left(std::to_string(cm.at(i, j)), col_w[j]);
    }
    out += '\n';
  }

  const std::vector<Metrics> per_class = all_class_metrics(cm);
  const WeightedAverages avg = weighted_average(cm, per_class);

  out += '\n';
  out += pad_right("class", name_w);
  for (const char* h : {"support", "accuracy", "precision", "recall", "f1"}) {
    out += "  " + pad_left(h, 9);
  }
  out += '\n';
  for (size_t i = 0; i < c; ++i) {
    const Metrics& m = per_class[i];
    out += pad_right(cm.class_names[i], name_w);
    out += "  " + pad_left(std::to_string(m.support()), 9);
    out += "  " + pad_left(fixed4(m.accuracy), 9);
    out += "  " + pad_left(fixed4(m.precision), 9);
    out += "  " + pad_left(fixed4(m.recall), 9);
    out += "  " + pad_left(fixed4(m.f1), 9);
    out += '\n';
  }
  out += pad_right("weighted avg", name_w);
  out += "  " + pad_left(std::to_string(cm.total()), 9);
  out += "  " + pad_left(fixed4(avg.accuracy), 9);
  out += "  " + pad_left(fixed4(avg.precision), 9);
  out += "  " + pad_left(fixed4(avg.recall), 9);
  out += "  " + pad_left(fixed4(avg.f1), 9);
  out += '\n';
  out += "\noverall accuracy: " + fixed4(overall_accuracy(cm)) + '\n';
  return out;
}

std::string confusion_csv(const ConfusionMatrix& cm) {
  std::string out = "actual\\predicted";
  for (const std::string& n : cm.class_names) {
    out += ',';
    out += n;
  }
  out += '\n';
  for (size_t i = 0; i < cm.classes(); ++i) {
    out += cm.class_names[i];
    for (size_t j = 0; j < cm.classes(); ++j) {
      out += ',';
      out += std::to_string(cm.at(i, j));
    }
    out += '\n';
  }
  return out;
}

json metrics_json(const ConfusionMatrix& cm) {
  json doc;
  doc["schema_version"] = 1;
  doc["class_names"] = cm.class_names;
  json grid = json::array();
  for (size_t i = 0; i < cm.classes(); ++i) {
    json row = json::array();
    for (size_t j = 0; j < cm.classes(); ++j) row.push_back(cm.at(i, j));
    grid.push_back(std::move(row));
  }
  doc["confusion"] = std::move(grid);

  const std::vector<Metrics> per_class = all_class_metrics(cm);
  json jm = json::array();
  for (size_t i = 0; i < per_class.size(); ++i) {
    const Metrics& m = per_class[i];
    jm.push_back({{"name", cm.class_names[i]},
                  {"tp", m.tp},
                  {"tn", m.tn},
                  {"fp", m.fp},
                  {"fn", m.fn},
                  {"support", m.support()},
                  {"accuracy", m.accuracy},
                  {"precision", m.precision},
                  {"recall", m.recall},
                  {"f1", m.f1}});
  }
  doc["per_class"] = std::move(jm);

  const WeightedAverages avg = weighted_average(cm, per_class);
  doc["weighted"] = {{"accuracy", avg.accuracy},
                     {"precision", avg.precision},
                     {"recall", avg.recall},
                     {"f1", avg.f1},
                     {"support", cm.total()}};
  doc["overall_accuracy"] = overall_accuracy(cm);
  return doc;
}

namespace {

void write_text_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << body;
  if (!out) throw ConfigError("write failed: " + path.string());
}

}  // namespace

void emit_report(const ConfusionMatrix& cm, const std::filesystem::path& dir,
                 const json& extra) {
  if (cm.classes() == 0) throw ConfigError("emit_report: empty class list");
  std::filesystem::create_directories(dir);
  json doc = extra.is_object() ? extra : json::object();
  doc["metrics"] = metrics_json(cm);
  write_text_file(dir / "report.json", doc.dump(2) + "\n");
  write_text_file(dir / "report.txt", render_table(cm));
  write_text_file(dir / "confusion.csv", confusion_csv(cm));
}

}  // namespace iotprint::report
