#include "iotprint/fingerprint.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include <openssl/evp.h>

#include "iotprint/errors.hpp"

namespace iotprint::fp {

Digest sha256(std::span<const uint8_t> data) {
  Digest out{};
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr);
  return out;
}

std::string hex_digest(const Digest& digest) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  s.reserve(64);
  for (uint8_t b : digest) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 0x0F]);
  }
  return s;
}

std::vector<uint8_t> extract_payload(const flow::SessionRecord& session) {
  size_t total = 0;
  for (const flow::SessionPacket& pkt : session.packets) total += pkt.tcp_payload.size();
  std::vector<uint8_t> payload;
  payload.reserve(total);
  for (const flow::SessionPacket& pkt : session.packets) {
    payload.insert(payload.end(), pkt.tcp_payload.begin(), pkt.tcp_payload.end());
  }
  return payload;
}

std::vector<std::vector<uint8_t>> dedupe(std::vector<std::vector<uint8_t>> payloads) {
  std::vector<std::vector<uint8_t>> kept;
  kept.reserve(payloads.size());
  std::set<Digest> seen;
  for (std::vector<uint8_t>& payload : payloads) {
    if (payload.empty()) continue;
    if (seen.insert(sha256(payload)).second) kept.push_back(std::move(payload));
  }
  return kept;
}

PayloadFingerprint normalize(std::span<const uint8_t> payload) {
  if (payload.empty()) throw FormatError("fingerprint: cannot normalize an empty payload");
  PayloadFingerprint out;
  out.source_digest = sha256(payload);
  const size_t n = std::min(payload.size(), kFingerprintBytes);
  std::copy_n(payload.begin(), n, out.bytes.begin());  // remainder stays 0x00
  return out;
}

Raster to_image(const PayloadFingerprint& fingerprint) {
  Raster raster;
  for (size_t r = 0; r < kImageSide; ++r) {
    for (size_t c = 0; c < kImageSide; ++c) {
      raster.pixels[r][c] = fingerprint.bytes[r * kImageSide + c];
    }
  }
  return raster;
}

std::array<uint8_t, kFingerprintBytes> image_to_bytes(const Raster& raster) {
  std::array<uint8_t, kFingerprintBytes> bytes{};
  for (size_t r = 0; r < kImageSide; ++r) {
    for (size_t c = 0; c < kImageSide; ++c) {
      bytes[r * kImageSide + c] = raster.pixels[r][c];
    }
  }
  return bytes;
}

void write_pgm(const Raster& raster, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("pgm: cannot open " + path + " for writing");
  out << "P5\n" << kImageSide << " " << kImageSide << "\n255\n";
  for (const auto& row : raster.pixels) {
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!out) throw FormatError("pgm: write failed for " + path);
}

Raster read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("pgm: cannot open " + path);
  std::string magic;
  size_t width = 0, height = 0, maxval = 0;
  in >> magic >> width >> height >> maxval;
  if (magic != "P5" || width != kImageSide || height != kImageSide || maxval != 255) {
    throw FormatError("pgm: " + path + " is not a 28x28 maxval-255 P5 file");
  }
  in.get();  // single whitespace after maxval
  Raster raster;
  for (auto& row : raster.pixels) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
  if (!in) throw FormatError("pgm: truncated pixel data in " + path);
  return raster;
}

void write_bin(std::span<const uint8_t> bytes, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("bin: cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("bin: write failed for " + path);
}

}  // namespace iotprint::fp
