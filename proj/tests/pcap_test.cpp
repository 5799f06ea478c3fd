#include "iotprint/pcap.hpp"

#include <gtest/gtest.h>

#include <cstring>

#include "iotprint/errors.hpp"
#include "testutil.hpp"

namespace pcap = iotprint::pcap;
using iotprint::FormatError;

namespace {

std::vector<uint8_t> sample_frames_pcap() {
  std::vector<pcap::RawPacket> packets;
  packets.push_back(testutil::make_packet(0, {0xDE, 0xAD, 0xBE, 0xEF}, 100, 1));
  packets.push_back(testutil::make_packet(1, {}, 100, 2));
  packets.push_back(testutil::make_packet(2, std::vector<uint8_t>(300, 0x55), 101, 3));
  return pcap::build_pcap(packets, 4096);
}

// Byte-swaps every header/record field of a native classic pcap image.
std::vector<uint8_t> byteswap_pcap(std::vector<uint8_t> bytes) {
  auto swap32 = [&](size_t at) {
    uint32_t v;
    std::memcpy(&v, bytes.data() + at, 4);
    v = __builtin_bswap32(v);
    std::memcpy(bytes.data() + at, &v, 4);
  };
  auto swap16 = [&](size_t at) {
    uint16_t v;
    std::memcpy(&v, bytes.data() + at, 2);
    v = __builtin_bswap16(v);
    std::memcpy(bytes.data() + at, &v, 2);
  };
  swap32(0);
  swap16(4);
  swap16(6);
  swap32(8);
  swap32(12);
  swap32(16);
  swap32(20);
  size_t offset = 24;
  while (offset < bytes.size()) {
    uint32_t caplen;
    std::memcpy(&caplen, bytes.data() + offset + 8, 4);
    swap32(offset);
    swap32(offset + 4);
    swap32(offset + 8);
    swap32(offset + 12);
    offset += 16 + caplen;
  }
  return bytes;
}

TEST(Pcap, BuildParseRoundTrip) {
  const std::vector<uint8_t> image = sample_frames_pcap();
  pcap::FileHeader hdr;
  const auto packets = pcap::parse_pcap(image, &hdr);

  EXPECT_FALSE(hdr.swapped);
  EXPECT_EQ(hdr.snaplen, 4096u);
  EXPECT_EQ(hdr.link_type, pcap::kLinkTypeEthernet);
  ASSERT_EQ(packets.size(), 3u);
  EXPECT_EQ(packets[0].link_bytes, (std::vector<uint8_t>{0xDE, 0xAD, 0xBE, 0xEF}));
  EXPECT_EQ(packets[0].ts_sec, 100u);
  EXPECT_EQ(packets[0].ts_usec, 1u);
  EXPECT_TRUE(packets[1].link_bytes.empty());
  EXPECT_EQ(packets[2].link_bytes.size(), 300u);
  for (size_t i = 0; i < packets.size(); ++i) EXPECT_EQ(packets[i].capture_order, i);
}

TEST(Pcap, SwappedEndiannessParsesIdentically) {
  const std::vector<uint8_t> native = sample_frames_pcap();
  const std::vector<uint8_t> swapped = byteswap_pcap(native);
  ASSERT_NE(native, swapped);

  pcap::FileHeader hdr;
  const auto a = pcap::parse_pcap(native);
  const auto b = pcap::parse_pcap(swapped, &hdr);
  EXPECT_TRUE(hdr.swapped);
  ASSERT_EQ(a.size(), b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].ts_sec, b[i].ts_sec);
    EXPECT_EQ(a[i].ts_usec, b[i].ts_usec);
    EXPECT_EQ(a[i].link_bytes, b[i].link_bytes);
  }
}

TEST(Pcap, HeaderOnlyFileYieldsNoPackets) {
  const auto image = pcap::build_pcap({});
  EXPECT_EQ(image.size(), 24u);
  EXPECT_TRUE(pcap::parse_pcap(image).empty());
}

TEST(Pcap, RejectsPcapng) {
  std::vector<uint8_t> bytes(24, 0);
  const uint32_t magic = pcap::kMagicPcapng;
  std::memcpy(bytes.data(), &magic, 4);
  try {
    pcap::parse_pcap(bytes);
    FAIL() << "pcapng magic must be rejected";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("pcapng"), std::string::npos);
  }
}

TEST(Pcap, RejectsUnknownMagic) {
  std::vector<uint8_t> bytes(24, 0x42);
  EXPECT_THROW(pcap::parse_pcap(bytes), FormatError);
}

TEST(Pcap, RejectsShortGlobalHeader) {
  std::vector<uint8_t> bytes(10, 0);
  EXPECT_THROW(pcap::parse_pcap(bytes), FormatError);
}

TEST(Pcap, RejectsNonEthernetLinkType) {
  std::vector<uint8_t> image = pcap::build_pcap({});
  const uint32_t link_type = 101;  // raw IP
  std::memcpy(image.data() + 20, &link_type, 4);
  try {
    pcap::parse_pcap(image);
    FAIL() << "non-Ethernet link type must be rejected";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("link type"), std::string::npos);
  }
}

TEST(Pcap, RejectsTruncatedRecordHeader) {
  std::vector<uint8_t> image = sample_frames_pcap();
  image.resize(24 + 8);  // half a record header
  try {
    pcap::parse_pcap(image);
    FAIL() << "truncated record header must be rejected";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("record 0"), std::string::npos);
  }
}

TEST(Pcap, RejectsTruncatedRecordData) {
  std::vector<uint8_t> image = sample_frames_pcap();
  image.resize(image.size() - 1);  // last record loses a byte
  try {
    pcap::parse_pcap(image);
    FAIL() << "truncated record data must be rejected";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("record 2"), std::string::npos);
  }
}

TEST(Pcap, RejectsImplausibleCaplen) {
  std::vector<uint8_t> image = pcap::build_pcap({testutil::make_packet(0, {1, 2, 3})});
  const uint32_t caplen = 0x40000000;  // 1 GiB
  std::memcpy(image.data() + 24 + 8, &caplen, 4);
  EXPECT_THROW(pcap::parse_pcap(image), FormatError);
}

TEST(Pcap, FileRoundTripAndMissingFile) {
  testutil::TempDir tmp("pcap");
  const std::string path = tmp.sub("capture.pcap");

  std::vector<pcap::RawPacket> packets;
  packets.push_back(testutil::make_packet(0, {9, 8, 7}, 42, 7));
  pcap::write_pcap_file(path, packets);

  const auto loaded = pcap::read_pcap_file(path);
  ASSERT_EQ(loaded.size(), 1u);
  EXPECT_EQ(loaded[0].link_bytes, (std::vector<uint8_t>{9, 8, 7}));
  EXPECT_EQ(loaded[0].ts_sec, 42u);

  EXPECT_THROW(pcap::read_pcap_file(tmp.sub("absent.pcap")), FormatError);
}

}  // namespace
