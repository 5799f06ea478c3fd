#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "iotprint/session.hpp"

namespace iotprint::fp {

inline constexpr size_t kFingerprintBytes = 784;
inline constexpr size_t kImageSide = 28;

using Digest = std::array<uint8_t, 32>;

Digest sha256(std::span<const uint8_t> data);
std::string hex_digest(const Digest& digest);

// The classification unit: exactly 784 payload bytes plus the digest of the
// full pre-trim payload for duplicate tracking.
struct PayloadFingerprint {
  std::array<uint8_t, kFingerprintBytes> bytes{};
  Digest source_digest{};
  std::string origin_file;
  flow::SessionKey origin_key;
};

// Concatenated TCP payload of every packet (both directions) in capture order.
std::vector<uint8_t> extract_payload(const flow::SessionRecord& session);

// Drops empty payloads and all but the first occurrence of each distinct
// payload, preserving order. Scope is the caller's (one device label).
std::vector<std::vector<uint8_t>> dedupe(std::vector<std::vector<uint8_t>> payloads);

// Trim to 784 bytes or zero-pad up to it. Empty input is a FormatError.
PayloadFingerprint normalize(std::span<const uint8_t> payload);

// 28x28 grayscale raster; pixel (r, c) = bytes[r*28 + c].
struct Raster {
  std::array<std::array<uint8_t, kImageSide>, kImageSide> pixels{};
};

Raster to_image(const PayloadFingerprint& fingerprint);
std::array<uint8_t, kFingerprintBytes> image_to_bytes(const Raster& raster);

// PGM binary (P5, maxval 255).
void write_pgm(const Raster& raster, const std::string& path);
Raster read_pgm(const std::string& path);

void write_bin(std::span<const uint8_t> bytes, const std::string& path);

}  // namespace iotprint::fp
