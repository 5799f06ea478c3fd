#include "iotprint/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iotprint/errors.hpp"
#include "iotprint/rng.hpp"

namespace iotprint::data {

namespace {

void append_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

uint32_t read_be32(std::span<const uint8_t> bytes, size_t offset, const char* what) {
  if (bytes.size() < offset + 4) throw FormatError(std::string("idx: truncated ") + what);
  return static_cast<uint32_t>(bytes[offset]) << 24 | static_cast<uint32_t>(bytes[offset + 1]) << 16 |
         static_cast<uint32_t>(bytes[offset + 2]) << 8 | static_cast<uint32_t>(bytes[offset + 3]);
}

std::vector<uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("idx: cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string hex32(uint32_t v) {
  char buf[11];
  std::snprintf(buf, sizeof(buf), "0x%08x", v);
  return buf;
}

void write_file(const std::string& path, std::span<const uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("idx: cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("idx: write failed for " + path);
}

}  // namespace

const char* split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::train: return "train";
    case SplitTag::validation: return "validation";
    case SplitTag::test: return "test";
    default: return "unsplit";
  }
}

void LabeledDataset::append_row(std::span<const uint8_t> row_bytes, uint8_t label) {
  if (row_bytes.size() != fp::kFingerprintBytes) {
    throw FormatError("dataset: row must be exactly 784 bytes");
  }
  pixels.insert(pixels.end(), row_bytes.begin(), row_bytes.end());
  labels.push_back(label);
}

std::set<std::string> filter_devices(const std::map<std::string, size_t>& session_counts,
                                     size_t min_sessions) {
  std::set<std::string> retained;
  for (const auto& [label, count] : session_counts) {
    if (count > min_sessions) retained.insert(label);
  }
  return retained;
}

SplitResult split(const LabeledDataset& dataset, const SplitPolicy& policy) {
  if (dataset.split_tag != SplitTag::unsplit) {
    throw ConfigError("split: dataset has already been split");
  }
  if (!(policy.validation_fraction > 0.0) || !(policy.test_fraction > 0.0) ||
      policy.validation_fraction + policy.test_fraction >= 1.0) {
    throw ConfigError("split: fractions must be positive and sum below 1");
  }
  const size_t n = dataset.size();
  if (n < 10) throw ConfigError("split: dataset of " + std::to_string(n) + " rows is too small");

  const size_t class_count = dataset.label_names.empty()
                                 ? (*std::max_element(dataset.labels.begin(), dataset.labels.end()) + 1)
                                 : dataset.label_names.size();

  std::vector<std::vector<size_t>> by_class(class_count);
  for (size_t i = 0; i < n; ++i) by_class[dataset.labels[i]].push_back(i);

  Rng rng(policy.rng_seed);
  std::vector<uint8_t> assignment(n, 0);  // 0 train, 1 validation, 2 test
  for (std::vector<size_t>& indices : by_class) {
    const size_t class_n = indices.size();
    const auto n_val = static_cast<size_t>(std::llround(policy.validation_fraction * static_cast<double>(class_n)));
    const auto n_test = static_cast<size_t>(std::llround(policy.test_fraction * static_cast<double>(class_n)));
    rng.shuffle(indices);
    for (size_t i = 0; i < n_val; ++i) assignment[indices[i]] = 1;
    for (size_t i = n_val; i < n_val + n_test; ++i) assignment[indices[i]] = 2;
  }

  SplitResult result;
  result.train.label_names = dataset.label_names;
  result.train.split_tag = SplitTag::train;
  result.validation.label_names = dataset.label_names;
  result.validation.split_tag = SplitTag::validation;
  result.test.label_names = dataset.label_names;
  result.test.split_tag = SplitTag::test;
  for (size_t i = 0; i < n; ++i) {
    LabeledDataset& part = assignment[i] == 0   ? result.train
                           : assignment[i] == 1 ? result.validation
                                                : result.test;
    part.append_row(dataset.row(i), dataset.labels[i]);
  }
  return result;
}

std::vector<uint8_t> build_idx_images(const LabeledDataset& dataset) {
  std::vector<uint8_t> out;
  out.reserve(16 + dataset.pixels.size());
  append_be32(out, kIdxImageMagic);
  append_be32(out, static_cast<uint32_t>(dataset.size()));
  append_be32(out, fp::kImageSide);
  append_be32(out, fp::kImageSide);
  out.insert(out.end(), dataset.pixels.begin(), dataset.pixels.end());
  return out;
}

std::vector<uint8_t> build_idx_labels(const LabeledDataset& dataset) {
  std::vector<uint8_t> out;
  out.reserve(8 + dataset.labels.size());
  append_be32(out, kIdxLabelMagic);
  append_be32(out, static_cast<uint32_t>(dataset.size()));
  out.insert(out.end(), dataset.labels.begin(), dataset.labels.end());
  return out;
}

LabeledDataset parse_idx(std::span<const uint8_t> image_bytes,
                         std::span<const uint8_t> label_bytes) {
  const uint32_t image_magic = read_be32(image_bytes, 0, "image header");
  if (image_magic != kIdxImageMagic) {
    throw FormatError("idx: image magic mismatch (got " + hex32(image_magic) + ")");
  }
  const uint32_t n = read_be32(image_bytes, 4, "image header");
  const uint32_t rows = read_be32(image_bytes, 8, "image header");
  const uint32_t cols = read_be32(image_bytes, 12, "image header");
  if (rows != fp::kImageSide || cols != fp::kImageSide) {
    throw FormatError("idx: expected 28x28 images, got " + std::to_string(rows) + "x" +
                      std::to_string(cols));
  }
  const size_t expected_pixels = static_cast<size_t>(n) * fp::kFingerprintBytes;
  if (image_bytes.size() != 16 + expected_pixels) {
    throw FormatError("idx: image payload size mismatch for " + std::to_string(n) + " rows");
  }

  const uint32_t label_magic = read_be32(label_bytes, 0, "label header");
  if (label_magic != kIdxLabelMagic) {
    throw FormatError("idx: label magic mismatch (got " + hex32(label_magic) + ")");
  }
  const uint32_t label_n = read_be32(label_bytes, 4, "label header");
  if (label_n != n) {
    throw FormatError("idx: image count " + std::to_string(n) + " != label count " +
                      std::to_string(label_n));
  }
  if (label_bytes.size() != 8 + static_cast<size_t>(label_n)) {
    throw FormatError("idx: label payload size mismatch for " + std::to_string(label_n) + " rows");
  }

  LabeledDataset out;
  out.pixels.assign(image_bytes.begin() + 16, image_bytes.end());
  out.labels.assign(label_bytes.begin() + 8, label_bytes.end());
  const uint8_t max_label =
      out.labels.empty() ? 0 : *std::max_element(out.labels.begin(), out.labels.end());
  for (size_t c = 0; c <= max_label; ++c) out.label_names.push_back("class" + std::to_string(c));
  return out;
}

void write_idx(const LabeledDataset& dataset, const std::string& image_path,
               const std::string& label_path) {
  if (dataset.size() == 0) throw ConfigError("idx: refusing to write an empty dataset");
  write_file(image_path, build_idx_images(dataset));
  write_file(label_path, build_idx_labels(dataset));
}

LabeledDataset read_idx(const std::string& image_path, const std::string& label_path) {
  return parse_idx(read_file(image_path), read_file(label_path));
}

void write_dataset_dir(const LabeledDataset& dataset, const std::string& dir,
                       const std::string& manifest_extra_json) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path base(dir);
  write_idx(dataset, (base / "images-idx3-ubyte").string(), (base / "labels-idx1-ubyte").string());

  nlohmann::json manifest;
  manifest["schema_version"] = 1;
  manifest["label_names"] = dataset.label_names;
  manifest["rows"] = dataset.size();
  manifest["split_tag"] = split_tag_name(dataset.split_tag);
  if (!manifest_extra_json.empty()) {
    manifest["encode"] = nlohmann::json::parse(manifest_extra_json);
  }
  std::ofstream out(base / "manifest.json", std::ios::trunc);
  out << manifest.dump(2) << "\n";
  if (!out) throw FormatError("dataset: cannot write manifest in " + dir);
}

LabeledDataset read_dataset_dir(const std::string& dir) {
  const std::filesystem::path base(dir);
  LabeledDataset ds =
      read_idx((base / "images-idx3-ubyte").string(), (base / "labels-idx1-ubyte").string());
  std::ifstream in(base / "manifest.json");
  if (in) {
    nlohmann::json manifest;
    try {
      in >> manifest;
    } catch (const nlohmann::json::parse_error& e) {
      throw FormatError("dataset: invalid manifest.json in " + dir + ": " + e.what());
    }
    if (manifest.contains("label_names")) {
      ds.label_names = manifest["label_names"].get<std::vector<std::string>>();
      for (uint8_t label : ds.labels) {
        if (label >= ds.label_names.size()) {
          throw FormatError("dataset: label " + std::to_string(label) +
                            " out of range of manifest label_names");
        }
      }
    }
  }
  return ds;
}

}  // namespace iotprint::data
