#include "iotprint/fingerprint.hpp"

#include <gtest/gtest.h>

#include <cstring>
#include <set>

#include "iotprint/errors.hpp"
#include "testutil.hpp"

namespace fp = iotprint::fp;
namespace flow = iotprint::flow;
using iotprint::FormatError;
using iotprint::Rng;

namespace {

std::vector<uint8_t> bytes_of(const char* text) {
  return {reinterpret_cast<const uint8_t*>(text),
          reinterpret_cast<const uint8_t*>(text) + std::strlen(text)};
}

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(fp::hex_digest(fp::sha256(bytes_of("abc"))),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(fp::hex_digest(fp::sha256({})),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(fp::hex_digest(fp::sha256(bytes_of("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq"))),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST(ExtractPayload, ConcatenatesBothDirectionsInCaptureOrder) {
  flow::SessionRecord rec;
  rec.packets.push_back({true, 0, {1, 2}});
  rec.packets.push_back({false, 1, {3}});
  rec.packets.push_back({true, 2, {}});
  rec.packets.push_back({false, 3, {4, 5, 6}});
  EXPECT_EQ(fp::extract_payload(rec), (std::vector<uint8_t>{1, 2, 3, 4, 5, 6}));

  flow::SessionRecord empty;
  EXPECT_TRUE(fp::extract_payload(empty).empty());
}

TEST(Dedupe, DropsEmptiesAndRepeatsPreservingFirstOccurrence) {
  std::vector<std::vector<uint8_t>> payloads = {
      {1, 2, 3}, {}, {4, 5}, {1, 2, 3}, {6}, {}, {4, 5}, {4, 5}, {7, 8},
  };
  const auto unique = fp::dedupe(payloads);
  EXPECT_EQ(unique, (std::vector<std::vector<uint8_t>>{{1, 2, 3}, {4, 5}, {6}, {7, 8}}));
}

TEST(Dedupe, MatchesSetOracleOnRandomPayloads) {
  Rng rng(7);
  for (int run = 0; run < 10; ++run) {
    std::vector<std::vector<uint8_t>> payloads;
    const size_t count = 1 + rng.uniform_index(200);
    for (size_t i = 0; i < count; ++i) {
      // Tiny alphabet and lengths force plenty of duplicates and empties.
      std::vector<uint8_t> p(rng.uniform_index(4));
      for (auto& b : p) b = static_cast<uint8_t>(rng.uniform_index(3));
      payloads.push_back(std::move(p));
    }

    std::vector<std::vector<uint8_t>> expected;
    std::set<std::vector<uint8_t>> seen;
    for (const auto& p : payloads) {
      if (p.empty()) continue;
      if (seen.insert(p).second) expected.push_back(p);
    }
    EXPECT_EQ(fp::dedupe(payloads), expected) << "run " << run;
  }
}

TEST(Normalize, PadsShortPayloadsWithZeros) {
  const std::vector<uint8_t> payload = {9, 8, 7};
  const auto print = fp::normalize(payload);
  EXPECT_EQ(print.bytes[0], 9);
  EXPECT_EQ(print.bytes[1], 8);
  EXPECT_EQ(print.bytes[2], 7);
  for (size_t i = 3; i < fp::kFingerprintBytes; ++i) EXPECT_EQ(print.bytes[i], 0) << i;
  EXPECT_EQ(print.source_digest, fp::sha256(payload));
}

TEST(Normalize, TrimsLongPayloads) {
  std::vector<uint8_t> payload(2000);
  for (size_t i = 0; i < payload.size(); ++i) payload[i] = static_cast<uint8_t>(i % 251);
  const auto print = fp::normalize(payload);
  for (size_t i = 0; i < fp::kFingerprintBytes; ++i) {
    ASSERT_EQ(print.bytes[i], static_cast<uint8_t>(i % 251)) << i;
  }
  // The digest covers the full pre-trim payload, not the 784-byte window.
  EXPECT_EQ(print.source_digest, fp::sha256(payload));
  EXPECT_NE(print.source_digest,
            fp::sha256(std::span<const uint8_t>(payload).first(fp::kFingerprintBytes)));
}

TEST(Normalize, ExactWidthAndEmpty) {
  std::vector<uint8_t> payload(fp::kFingerprintBytes, 0x5A);
  const auto print = fp::normalize(payload);
  for (size_t i = 0; i < fp::kFingerprintBytes; ++i) ASSERT_EQ(print.bytes[i], 0x5A);
  EXPECT_THROW(fp::normalize(std::vector<uint8_t>{}), FormatError);
}

TEST(Raster, RowMajorMappingAndInverse) {
  fp::PayloadFingerprint print;
  for (size_t i = 0; i < fp::kFingerprintBytes; ++i) {
    print.bytes[i] = static_cast<uint8_t>(i % 256);
  }
  const fp::Raster image = fp::to_image(print);
  for (size_t r = 0; r < fp::kImageSide; ++r) {
    for (size_t c = 0; c < fp::kImageSide; ++c) {
      ASSERT_EQ(image.pixels[r][c], static_cast<uint8_t>((r * 28 + c) % 256));
    }
  }
  EXPECT_EQ(fp::image_to_bytes(image), print.bytes);
}

TEST(Pgm, RoundTripAndHeader) {
  testutil::TempDir tmp("pgm");
  const std::string path = tmp.sub("image.pgm");

  fp::Raster image;
  Rng rng(3);
  for (auto& row : image.pixels) {
    for (auto& px : row) px = static_cast<uint8_t>(rng.uniform_index(256));
  }
  fp::write_pgm(image, path);

  const auto file = testutil::read_file_bytes(path);
  const std::string header(file.begin(), file.begin() + 13);
  EXPECT_EQ(header, "P5\n28 28\n255\n");
  EXPECT_EQ(file.size(), 13u + 784u);

  const fp::Raster loaded = fp::read_pgm(path);
  EXPECT_EQ(loaded.pixels, image.pixels);
}

TEST(Pgm, ReadRejectsNonPgm) {
  testutil::TempDir tmp("pgm-bad");
  const std::string path = tmp.sub("bad.pgm");
  std::ofstream(path) << "P6\n28 28\n255\n";
  EXPECT_THROW(fp::read_pgm(path), FormatError);
  EXPECT_THROW(fp::read_pgm(tmp.sub("absent.pgm")), FormatError);
}

TEST(WriteBin, WritesExactBytes) {
  testutil::TempDir tmp("bin");
  const std::string path = tmp.sub("payload.bin");
  const std::vector<uint8_t> payload = {0, 255, 10, 20};
  fp::write_bin(payload, path);
  EXPECT_EQ(testutil::read_file_bytes(path), payload);
}

}  // namespace
