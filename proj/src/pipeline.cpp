#include "iotprint/pipeline.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "iotprint/errors.hpp"
#include "iotprint/fingerprint.hpp"
#include "iotprint/log.hpp"
#include "iotprint/neuralnet.hpp"
#include "iotprint/pcap.hpp"
#include "iotprint/report.hpp"
#include "iotprint/session.hpp"

namespace iotprint::pipe {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path.string());
  out << body;
  if (!out) throw ConfigError("write failed: " + path.string());
}

std::vector<uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path.string());
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  if (in.bad()) throw FormatError("read failed: " + path.string());
  return bytes;
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open: " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": invalid JSON: " + e.what());
  }
}

std::string payload_file_name(uint64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%08llu.bin", static_cast<unsigned long long>(id));
  return buf;
}

std::string session_pcap_name(uint64_t id) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%08llu.pcap", static_cast<unsigned long long>(id));
  return buf;
}

// Filesystem-safe directory name for a device label.
std::string sanitize_label(const std::string& label) {
  std::string out;
  for (char c : label) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '-' || c == '_' || c == '.';
    out += ok ? c : '-';
  }
  return out.empty() ? std::string("label") : out;
}

}  // namespace

SplitSummary cmd_split(const SplitOptions& options) {
  if (options.inputs.empty()) throw ConfigError("split: no input pcap files given");
  if (options.out_dir.empty()) throw ConfigError("split: output directory required");

  flow::MacMap mac_map;
  const bool have_map = !options.mac_map_path.empty();
  if (have_map) mac_map = flow::load_mac_map(options.mac_map_path);

  const fs::path out(options.out_dir);
  fs::create_directories(out / "payloads");
  if (options.emit_pcaps) fs::create_directories(out / "sessions");

  SplitSummary summary;
  json session_meta = json::array();
  json input_meta = json::array();
  std::map<std::string, uint64_t> device_counts;
  uint64_t next_id = 0;

  for (const std::string& input : options.inputs) {
    const std::vector<pcap::RawPacket> packets = pcap::read_pcap_file(input);
    flow::SplitStats stats;
    const std::vector<flow::SessionRecord> sessions = flow::split_sessions(packets, &stats);

    input_meta.push_back({{"file", input},
                          {"frames", stats.frames},
                          {"tcp_packets", stats.tcp_packets},
                          {"udp_packets", stats.udp_packets},
                          {"skipped_frames", stats.skipped_frames},
                          {"udp_flows", stats.udp_flows},
                          {"tcp_sessions", sessions.size()}});
    summary.frames += stats.frames;
    summary.discarded_flows += stats.udp_flows;
    summary.skipped_frames += stats.skipped_frames;

    for (const flow::SessionRecord& session : sessions) {
      const uint64_t id = next_id++;
      const std::string mac = flow::format_mac(session.initiator_mac);
      std::string label = mac;
      if (have_map) {
        const auto it = mac_map.labels.find(session.initiator_mac);
        label = it == mac_map.labels.end() ? mac_map.unmapped_label : it->second;
      }
      device_counts[label] += 1;

      const std::vector<uint8_t> payload = fp::extract_payload(session);
      const std::string payload_rel = "payloads/" + payload_file_name(id);
      fp::write_bin(payload, (out / payload_rel).string());

      if (options.emit_pcaps) {
        std::vector<pcap::RawPacket> frames;
        frames.reserve(session.packets.size());
        for (const flow::SessionPacket& p : session.packets) {
          frames.push_back(packets[p.capture_order]);
        }
        pcap::write_pcap_file((out / "sessions" / session_pcap_name(id)).string(), frames);
      }

      session_meta.push_back({{"id", id},
                              {"source", input},
                              {"label", label},
                              {"initiator_mac", mac},
                              {"key", flow::format_key(session.key)},
                              {"packets", session.packets.size()},
                              {"payload_bytes", payload.size()},
                              {"payload_file", payload_rel}});
    }
  }
  summary.sessions = next_id;

  json devices = json::object();
  for (const auto& [label, count] : device_counts) devices[label] = {{"sessions", count}};

  json manifest;
  manifest["schema_version"] = 1;
  manifest["inputs"] = std::move(input_meta);
  manifest["mac_map"] = options.mac_map_path;
  manifest["session_count"] = summary.sessions;
  manifest["discarded_flows"] = summary.discarded_flows;
  manifest["devices"] = std::move(devices);
  manifest["sessions"] = std::move(session_meta);
  write_text(out / "sessions.json", manifest.dump(2) + "\n");

  log::info("split: ", summary.sessions, " sessions from ", options.inputs.size(),
            " file(s), ", summary.discarded_flows, " non-TCP flow(s) discarded");
  return summary;
}

EncodeSummary cmd_encode(const EncodeOptions& options) {
  if (options.sessions_dir.empty()) throw ConfigError("encode: sessions directory required");
  if (options.out_dir.empty()) throw ConfigError("encode: output directory required");

  const fs::path base(options.sessions_dir);
  const json manifest = read_json(base / "sessions.json");
  try {
    if (manifest.at("schema_version").get<int>() != 1) {
      throw FormatError(options.sessions_dir + ": unsupported sessions schema version");
    }
  } catch (const json::exception& e) {
    throw FormatError(options.sessions_dir + ": invalid sessions.json: " + e.what());
  }

  // Payload files per label, in session order.
  std::map<std::string, std::vector<std::string>> by_label;
  try {
    for (const json& s : manifest.at("sessions")) {
      by_label[s.at("label").get<std::string>()].push_back(
          s.at("payload_file").get<std::string>());
    }
  } catch (const json::exception& e) {
    throw FormatError(options.sessions_dir + ": invalid sessions.json: " + e.what());
  }

  for (const std::string& drop : options.drop_labels) {
    if (by_label.erase(drop) == 0) log::warn("encode: drop label not present: ", drop);
  }

  std::map<std::string, size_t> counts;
  for (const auto& [label, files] : by_label) counts[label] = files.size();
  const std::set<std::string> kept = data::filter_devices(counts, options.min_sessions);
  if (kept.empty()) {
    throw FormatError("encode: no device label has more than " +
                      std::to_string(options.min_sessions) + " sessions");
  }

  std::vector<std::string> order;
  if (options.label_order.empty()) {
    order.assign(kept.begin(), kept.end());  // std::set iterates sorted
  } else {
    std::set<std::string> remaining = kept;
    for (const std::string& label : options.label_order) {
      if (remaining.erase(label) == 0) {
        throw ConfigError("encode: label order entry not among kept labels: " + label);
      }
      order.push_back(label);
    }
    if (!remaining.empty()) {
      throw ConfigError("encode: label order misses kept label: " + *remaining.begin());
    }
  }

  data::LabeledDataset dataset;
  dataset.label_names = order;
  EncodeSummary summary;
  summary.labels = order.size();
  json per_label = json::object();

  for (size_t label_idx = 0; label_idx < order.size(); ++label_idx) {
    const std::string& label = order[label_idx];
    std::vector<std::vector<uint8_t>> payloads;
    payloads.reserve(by_label[label].size());
    for (const std::string& rel : by_label[label]) {
      payloads.push_back(read_bytes(base / rel));
    }
    const size_t total = payloads.size();
    const size_t empties =
        static_cast<size_t>(std::count_if(payloads.begin(), payloads.end(),
                                          [](const std::vector<uint8_t>& p) { return p.empty(); }));
    const std::vector<std::vector<uint8_t>> unique = fp::dedupe(std::move(payloads));
    const size_t duplicates = total - empties - unique.size();
    summary.empty_dropped += empties;
    summary.duplicates_dropped += duplicates;

    for (const std::vector<uint8_t>& payload : unique) {
      const fp::PayloadFingerprint print = fp::normalize(payload);
      dataset.append_row(print.bytes, static_cast<uint8_t>(label_idx));
    }
    per_label[label] = {{"sessions", total},
                        {"empty_payloads", empties},
                        {"duplicates", duplicates},
                        {"rows", unique.size()}};
  }

  if (dataset.size() == 0) throw FormatError("encode: no usable sessions after deduplication");
  summary.rows = dataset.size();

  json extra;
  extra["source"] = options.sessions_dir;
  extra["min_sessions"] = options.min_sessions;
  extra["drop_labels"] = options.drop_labels;
  extra["per_label"] = std::move(per_label);
  extra["duplicates_dropped"] = summary.duplicates_dropped;
  extra["empty_dropped"] = summary.empty_dropped;
  data::write_dataset_dir(dataset, options.out_dir, extra.dump());

  if (options.images) {
    const fs::path out(options.out_dir);
    std::vector<size_t> row_in_label(order.size(), 0);
    for (size_t i = 0; i < dataset.size(); ++i) {
      const uint8_t label_idx = dataset.labels[i];
      const fs::path dir = out / "images" / sanitize_label(order[label_idx]);
      fs::create_directories(dir);
      fp::PayloadFingerprint print;
      const std::span<const uint8_t> row = dataset.row(i);
      std::copy(row.begin(), row.end(), print.bytes.begin());
      char name[32];
      std::snprintf(name, sizeof(name), "%05zu.pgm", row_in_label[label_idx]++);
      fp::write_pgm(fp::to_image(print), (dir / name).string());
    }
  }

  log::info("encode: ", summary.rows, " rows over ", summary.labels, " label(s), ",
            summary.duplicates_dropped, " duplicate payload(s) dropped");
  return summary;
}

namespace {

// Removes rows of the dropped labels and reindexes the rest, keeping order.
data::LabeledDataset drop_from_dataset(const data::LabeledDataset& src,
                                       const std::vector<std::string>& drop_labels) {
  if (drop_labels.empty()) return src;
  std::set<size_t> dropped;
  for (const std::string& label : drop_labels) {
    const auto it = std::find(src.label_names.begin(), src.label_names.end(), label);
    if (it == src.label_names.end()) {
      log::warn("train: drop label not present: ", label);
      continue;
    }
    dropped.insert(static_cast<size_t>(it - src.label_names.begin()));
  }
  if (dropped.empty()) return src;

  data::LabeledDataset out;
  out.split_tag = src.split_tag;
  std::vector<int> remap(src.label_names.size(), -1);
  for (size_t i = 0; i < src.label_names.size(); ++i) {
    if (!dropped.contains(i)) {
      remap[i] = static_cast<int>(out.label_names.size());
      out.label_names.push_back(src.label_names[i]);
    }
  }
  if (out.label_names.empty()) throw ConfigError("train: every label was dropped");
  for (size_t i = 0; i < src.size(); ++i) {
    const int to = remap[src.labels[i]];
    if (to >= 0) out.append_row(src.row(i), static_cast<uint8_t>(to));
  }
  return out;
}

json config_json(const TrainOptions& options) {
  const cls::ExperimentConfig& c = options.config;
  return {{"epochs", c.epochs},
          {"epoch_search", c.epoch_search},
          {"batch_size", c.batch_size},
          {"hidden_width", c.hidden_width},
          {"init", {{"mean", c.init.mean}, {"stddev", c.init.stddev}, {"seed", c.init.seed}}},
          {"adam",
           {{"learning_rate", c.adam.learning_rate},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"epsilon", c.adam.epsilon}}},
          {"shuffle_seed", c.shuffle_seed},
          {"threshold_grid_step", c.threshold_grid_step},
          {"strict_class_count", c.strict_class_count},
          {"split",
           {{"validation_fraction", options.split.validation_fraction},
            {"test_fraction", options.split.test_fraction},
            {"seed", options.split.rng_seed}}},
          {"drop_labels", options.drop_labels}};
}

void write_train_manifest(const TrainOptions& options, const json& results) {
  json manifest;
  manifest["schema_version"] = 1;
  manifest["command"] = "train";
  manifest["experiment"] = options.experiment;
  manifest["dataset"] = options.dataset_dir;
  manifest["out"] = options.out_dir;
  manifest["exclude_label"] = options.exclude_label;
  manifest["config"] = config_json(options);
  manifest["results"] = results;
  write_text(fs::path(options.out_dir) / "manifest.json", manifest.dump(2) + "\n");
}

}  // namespace

TrainSummary cmd_train(const TrainOptions& options) {
  if (options.dataset_dir.empty()) throw ConfigError("train: dataset directory required");
  if (options.out_dir.empty()) throw ConfigError("train: output directory required");
  if (options.experiment != 1 && options.experiment != 2) {
    throw ConfigError("train: experiment must be 1 or 2");
  }
  if (options.experiment == 2 && options.exclude_label.empty()) {
    throw ConfigError("train: experiment 2 needs --exclude <label>");
  }
  if (options.experiment == 2 &&
      std::find(options.drop_labels.begin(), options.drop_labels.end(), options.exclude_label) !=
          options.drop_labels.end()) {
    throw ConfigError("train: excluded label is also dropped: " + options.exclude_label);
  }

  const data::LabeledDataset full =
      drop_from_dataset(data::read_dataset_dir(options.dataset_dir), options.drop_labels);
  data::SplitResult parts = data::split(full, options.split);
  cls::DatasetBundle bundle{std::move(parts.train), std::move(parts.validation),
                            std::move(parts.test)};

  const fs::path out(options.out_dir);
  fs::create_directories(out);
  TrainSummary summary;

  if (options.experiment == 1) {
    cls::Experiment1Result res = cls::run_experiment1(bundle, options.config);
    summary.epochs_used = res.epochs_used;
    summary.test_accuracy = res.test_accuracy;

    nn::save_model(res.model, out / "model.json");
    write_text(out / "history.csv", nn::history_csv(res.history));
    if (!res.search_history.empty()) {
      write_text(out / "search_history.csv", nn::history_csv(res.search_history));
    }

    json extra;
    extra["experiment"] = "identify";
    extra["dataset"] = options.dataset_dir;
    extra["epochs_used"] = res.epochs_used;
    extra["test_loss"] = res.test_loss;
    extra["config"] = config_json(options);
    report::emit_report(res.test_matrix, out, extra);

    json results;
    results["epochs_used"] = res.epochs_used;
    results["test_accuracy"] = res.test_accuracy;
    results["test_loss"] = res.test_loss;
    write_train_manifest(options, results);
    log::info("experiment 1: test accuracy ", res.test_accuracy, " after ", res.epochs_used,
              " epoch(s)");
  } else {
    cls::Experiment2Result res = cls::run_experiment2(bundle, options.exclude_label,
                                                      options.config);
    summary.epochs_used = res.epochs_used;
    summary.test_accuracy = res.test_accuracy;
    summary.threshold = res.profile.threshold;

    nn::save_model(res.model, out / "model.json");
    res.profile.model_ref = "model.json";
    cls::save_profile(res.profile, out / "profile.json");
    write_text(out / "history.csv", nn::history_csv(res.history));
    if (!res.search_history.empty()) {
      write_text(out / "search_history.csv", nn::history_csv(res.search_history));
    }

    json extra;
    extra["experiment"] = "hold-one-out";
    extra["dataset"] = options.dataset_dir;
    extra["excluded_label"] = options.exclude_label;
    extra["epochs_used"] = res.epochs_used;
    extra["threshold"] = res.profile.threshold;
    extra["validation_decision_accuracy"] = res.threshold_search.accuracy;
    extra["config"] = config_json(options);
    report::emit_report(res.test_matrix, out, extra);

    json results;
    results["epochs_used"] = res.epochs_used;
    results["threshold"] = res.profile.threshold;
    results["test_accuracy"] = res.test_accuracy;
    results["validation_decision_accuracy"] = res.threshold_search.accuracy;
    write_train_manifest(options, results);
    log::info("experiment 2 (", options.exclude_label, " held out): threshold ",
              res.profile.threshold, ", test accuracy ", res.test_accuracy);
  }
  return summary;
}

EvalSummary cmd_eval(const EvalOptions& options) {
  if (options.model_path.empty()) throw ConfigError("eval: model path required");
  if (options.dataset_dir.empty()) throw ConfigError("eval: dataset directory required");
  if (options.out_dir.empty()) throw ConfigError("eval: output directory required");

  const nn::MlpModel model = nn::load_model(options.model_path);
  const data::LabeledDataset ds = data::read_dataset_dir(options.dataset_dir);
  if (!model.label_names.empty() && !ds.label_names.empty() &&
      ds.label_names != model.label_names) {
    throw ConfigError("eval: dataset labels do not match the model's label names");
  }
  for (uint8_t label : ds.labels) {
    if (label >= model.class_count()) {
      throw ConfigError("eval: dataset label outside the model's class range");
    }
  }

  const nn::EvalResult eval = nn::evaluate(model, ds, options.batch_size);
  std::vector<std::string> names = model.label_names;
  if (names.empty()) {
    for (size_t i = 0; i < model.class_count(); ++i) names.push_back("class" + std::to_string(i));
  }
  report::ConfusionMatrix cm(names);
  for (size_t i = 0; i < ds.size(); ++i) cm.add(ds.labels[i], eval.predictions[i]);

  fs::create_directories(options.out_dir);
  json extra;
  extra["experiment"] = "eval";
  extra["model"] = options.model_path;
  extra["dataset"] = options.dataset_dir;
  extra["loss"] = eval.loss;
  report::emit_report(cm, options.out_dir, extra);

  log::info("eval: accuracy ", eval.accuracy, " over ", ds.size(), " row(s)");
  return {eval.accuracy, eval.loss};
}

DetectSummary cmd_detect_unknown(const DetectOptions& options) {
  if (options.model_path.empty()) throw ConfigError("detect-unknown: model path required");
  if (options.profile_path.empty()) throw ConfigError("detect-unknown: profile path required");
  if (options.inputs.empty()) throw ConfigError("detect-unknown: no inputs given");
  if (options.out_path.empty()) throw ConfigError("detect-unknown: output path required");

  const nn::MlpModel model = nn::load_model(options.model_path);
  const cls::ThresholdProfile profile = cls::load_profile(options.profile_path);

  const auto class_name = [&model](size_t i) {
    return i < model.label_names.size() ? model.label_names[i] : "class" + std::to_string(i);
  };

  DetectSummary summary;
  json verdicts = json::array();
  const auto record = [&](const std::string& input, const cls::Verdict& v) {
    (v.known ? summary.known : summary.unknown) += 1;
    verdicts.push_back({{"input", input},
                        {"decision", v.known ? "known" : "unknown"},
                        {"label", v.known ? class_name(v.class_index) : cls::kUnknownLabel},
                        {"max_prob", v.max_prob}});
  };

  for (const std::string& input : options.inputs) {
    if (fs::is_directory(input)) {
      const data::LabeledDataset ds = data::read_dataset_dir(input);
      for (size_t i = 0; i < ds.size(); ++i) {
        record(input + "#" + std::to_string(i),
               cls::classify_with_threshold(model, ds.row(i), profile.threshold));
      }
    } else {
      const std::vector<uint8_t> payload = read_bytes(input);
      const fp::PayloadFingerprint print = fp::normalize(payload);
      record(input, cls::classify_with_threshold(model, print.bytes, profile.threshold));
    }
  }

  json doc;
  doc["schema_version"] = 1;
  doc["model"] = options.model_path;
  doc["profile"] = {{"excluded_label", profile.excluded_label},
                    {"threshold", profile.threshold},
                    {"epochs", profile.epochs},
                    {"model_ref", profile.model_ref}};
  doc["known"] = summary.known;
  doc["unknown"] = summary.unknown;
  doc["verdicts"] = std::move(verdicts);
  write_text(options.out_path, doc.dump(2) + "\n");

  log::info("detect-unknown: ", summary.known, " known, ", summary.unknown, " unknown");
  return summary;
}

}  // namespace iotprint::pipe
