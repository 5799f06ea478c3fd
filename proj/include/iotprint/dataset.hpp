#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "iotprint/fingerprint.hpp"

namespace iotprint::data {

enum class SplitTag { unsplit, train, validation, test };

const char* split_tag_name(SplitTag tag);

// Fingerprint rows plus integer labels. Pixel rows are stored flat,
// 784 bytes each, in the order they were appended.
struct LabeledDataset {
  std::vector<uint8_t> pixels;  // size() == labels.size() * 784
  std::vector<uint8_t> labels;
  std::vector<std::string> label_names;
  SplitTag split_tag = SplitTag::unsplit;

  size_t size() const { return labels.size(); }
  std::span<const uint8_t> row(size_t i) const {
    return {pixels.data() + i * fp::kFingerprintBytes, fp::kFingerprintBytes};
  }
  void append_row(std::span<const uint8_t> row_bytes, uint8_t label);

  bool operator==(const LabeledDataset&) const = default;
};

struct SplitPolicy {
  double validation_fraction = 0.10;
  double test_fraction = 0.10;
  uint64_t rng_seed = 0;
};

// Device-inclusion rule: keep labels with strictly more than min_sessions.
std::set<std::string> filter_devices(const std::map<std::string, size_t>& session_counts,
                                     size_t min_sessions = 1000);

struct SplitResult {
  LabeledDataset train;
  LabeledDataset validation;
  LabeledDataset test;
};

// Stratified split: within each class, round(fraction * n) instances go to
// validation and test, chosen by a seeded shuffle. Row order within each part
// follows the input dataset.
SplitResult split(const LabeledDataset& dataset, const SplitPolicy& policy);

// IDX container (MNIST layout): big-endian magic + dims + raw data.
inline constexpr uint32_t kIdxImageMagic = 0x00000803;
inline constexpr uint32_t kIdxLabelMagic = 0x00000801;

void write_idx(const LabeledDataset& dataset, const std::string& image_path,
               const std::string& label_path);
LabeledDataset read_idx(const std::string& image_path, const std::string& label_path);

std::vector<uint8_t> build_idx_images(const LabeledDataset& dataset);
std::vector<uint8_t> build_idx_labels(const LabeledDataset& dataset);
LabeledDataset parse_idx(std::span<const uint8_t> image_bytes,
                         std::span<const uint8_t> label_bytes);

// Dataset directory = IDX pair + manifest.json carrying label names.
void write_dataset_dir(const LabeledDataset& dataset, const std::string& dir,
                       const std::string& manifest_extra_json = "");
LabeledDataset read_dataset_dir(const std::string& dir);

}  // namespace iotprint::data
