#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace iotprint::pcap {

// Classic pcap magics. pcapng is detected and rejected explicitly.
inline constexpr uint32_t kMagicNative = 0xA1B2C3D4;
inline constexpr uint32_t kMagicSwapped = 0xD4C3B2A1;
inline constexpr uint32_t kMagicPcapng = 0x0A0D0D0A;
inline constexpr uint32_t kLinkTypeEthernet = 1;

struct RawPacket {
  uint32_t ts_sec = 0;
  uint32_t ts_usec = 0;
  uint64_t capture_order = 0;       // record index within the file, 0-based
  std::vector<uint8_t> link_bytes;  // captured frame, length == record caplen
};

struct FileHeader {
  bool swapped = false;  // record fields are byte-swapped relative to the host
  uint32_t snaplen = 0;
  uint32_t link_type = kLinkTypeEthernet;
};

// Parses a classic pcap byte image (both endiannesses, Ethernet link type).
// Throws FormatError on a malformed global header, an unsupported format,
// or a truncated record (named by record index).
std::vector<RawPacket> parse_pcap(std::span<const uint8_t> file_bytes,
                                  FileHeader* header_out = nullptr);

std::vector<RawPacket> read_pcap_file(const std::string& path,
                                      FileHeader* header_out = nullptr);

// Serializes packets as a native-endian classic pcap image (Ethernet).
std::vector<uint8_t> build_pcap(const std::vector<RawPacket>& packets,
                                uint32_t snaplen = 65535);

void write_pcap_file(const std::string& path, const std::vector<RawPacket>& packets,
                     uint32_t snaplen = 65535);

}  // namespace iotprint::pcap
