#include "iotprint/pcap.hpp"

#include <cstring>
#include <fstream>

#include "iotprint/errors.hpp"

namespace iotprint::pcap {

namespace {

// Global header: magic, version, thiszone, sigfigs, snaplen, linktype (24 bytes).
constexpr size_t kGlobalHeaderSize = 24;
// Record header: ts_sec, ts_usec, caplen, origlen (16 bytes).
constexpr size_t kRecordHeaderSize = 16;

// Caplen sanity bound for corrupt files; real snaplens are far below this.
constexpr uint32_t kMaxCaplen = 256u * 1024 * 1024;

uint32_t load_u32(const uint8_t* p, bool swapped) {
  uint32_t v;
  std::memcpy(&v, p, 4);
  return swapped ? __builtin_bswap32(v) : v;
}

uint16_t load_u16(const uint8_t* p, bool swapped) {
  uint16_t v;
  std::memcpy(&v, p, 2);
  return swapped ? __builtin_bswap16(v) : v;
}

void store_u32(std::vector<uint8_t>& out, uint32_t v) {
  const size_t n = out.size();
  out.resize(n + 4);
  std::memcpy(out.data() + n, &v, 4);
}

void store_u16(std::vector<uint8_t>& out, uint16_t v) {
  const size_t n = out.size();
  out.resize(n + 2);
  std::memcpy(out.data() + n, &v, 2);
}

}  // namespace

std::vector<RawPacket> parse_pcap(std::span<const uint8_t> file_bytes, FileHeader* header_out) {
  if (file_bytes.size() < kGlobalHeaderSize) {
    throw FormatError("pcap: file too short for global header (" +
                      std::to_string(file_bytes.size()) + " bytes)");
  }
  uint32_t magic;
  std::memcpy(&magic, file_bytes.data(), 4);
  if (magic == kMagicPcapng || __builtin_bswap32(magic) == kMagicPcapng) {
    throw FormatError("pcap: pcapng input is not supported; convert to classic pcap first");
  }
  bool swapped;
  if (magic == kMagicNative) {
    swapped = false;
  } else if (magic == kMagicSwapped) {
    swapped = true;
  } else {
    throw FormatError("pcap: unrecognized magic number");
  }

  FileHeader hdr;
  hdr.swapped = swapped;
  const uint16_t version_major = load_u16(file_bytes.data() + 4, swapped);
  hdr.snaplen = load_u32(file_bytes.data() + 16, swapped);
  hdr.link_type = load_u32(file_bytes.data() + 20, swapped);
  if (version_major != 2) {
    throw FormatError("pcap: unsupported version " + std::to_string(version_major));
  }
  if (hdr.link_type != kLinkTypeEthernet) {
    throw FormatError("pcap: unsupported link type " + std::to_string(hdr.link_type) +
                      " (only Ethernet is handled)");
  }
  if (header_out != nullptr) *header_out = hdr;

  std::vector<RawPacket> packets;
  size_t offset = kGlobalHeaderSize;
  uint64_t index = 0;
  while (offset < file_bytes.size()) {
    if (file_bytes.size() - offset < kRecordHeaderSize) {
      throw FormatError("pcap: truncated record header at record " + std::to_string(index));
    }
    const uint8_t* rec = file_bytes.data() + offset;
    RawPacket pkt;
    pkt.ts_sec = load_u32(rec, swapped);
    pkt.ts_usec = load_u32(rec + 4, swapped);
    const uint32_t caplen = load_u32(rec + 8, swapped);
    if (caplen > kMaxCaplen) {
      throw FormatError("pcap: implausible captured length " + std::to_string(caplen) +
                        " at record " + std::to_string(index));
    }
    offset += kRecordHeaderSize;
    if (file_bytes.size() - offset < caplen) {
      throw FormatError("pcap: truncated record data at record " + std::to_string(index));
    }
    pkt.capture_order = index;
    pkt.link_bytes.assign(rec + kRecordHeaderSize, rec + kRecordHeaderSize + caplen);
    offset += caplen;
    ++index;
    packets.push_back(std::move(pkt));
  }
  return packets;
}

std::vector<RawPacket> read_pcap_file(const std::string& path, FileHeader* header_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("pcap: cannot open " + path);
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>());
  try {
    return parse_pcap(bytes, header_out);
  } catch (const FormatError& e) {
    throw FormatError(path + ": " + e.what());
  }
}

std::vector<uint8_t> build_pcap(const std::vector<RawPacket>& packets, uint32_t snaplen) {
  std::vector<uint8_t> out;
  out.reserve(kGlobalHeaderSize + packets.size() * (kRecordHeaderSize + 64));
  store_u32(out, kMagicNative);
  store_u16(out, 2);  // version 2.4
  store_u16(out, 4);
  store_u32(out, 0);  // thiszone
  store_u32(out, 0);  // sigfigs
  store_u32(out, snaplen);
  store_u32(out, kLinkTypeEthernet);
  for (const RawPacket& pkt : packets) {
    store_u32(out, pkt.ts_sec);
    store_u32(out, pkt.ts_usec);
    store_u32(out, static_cast<uint32_t>(pkt.link_bytes.size()));
    store_u32(out, static_cast<uint32_t>(pkt.link_bytes.size()));
    out.insert(out.end(), pkt.link_bytes.begin(), pkt.link_bytes.end());
  }
  return out;
}

void write_pcap_file(const std::string& path, const std::vector<RawPacket>& packets,
                     uint32_t snaplen) {
  const std::vector<uint8_t> bytes = build_pcap(packets, snaplen);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("pcap: cannot open " + path + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("pcap: write failed for " + path);
}

}  // namespace iotprint::pcap
