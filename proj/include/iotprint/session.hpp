#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "iotprint/pcap.hpp"

namespace iotprint::flow {

inline constexpr uint8_t kProtoTcp = 6;
inline constexpr uint8_t kProtoUdp = 17;

using MacAddr = std::array<uint8_t, 6>;

std::string format_mac(const MacAddr& mac);
// Accepts aa:bb:cc:dd:ee:ff or aa-bb-..., case-insensitive.
std::optional<MacAddr> parse_mac(const std::string& text);

struct Endpoint {
  uint32_t ip = 0;  // host byte order
  uint16_t port = 0;
  auto operator<=>(const Endpoint&) const = default;
};

std::string format_endpoint(const Endpoint& ep);

// Direction-independent 5-tuple: lo <= hi under (ip, port) ordering, so a flow
// and its reverse map to the same key.
struct SessionKey {
  Endpoint lo;
  Endpoint hi;
  uint8_t protocol = kProtoTcp;
  auto operator<=>(const SessionKey&) const = default;
};

SessionKey canonical_key(const Endpoint& src, const Endpoint& dst, uint8_t protocol);
std::string format_key(const SessionKey& key);

struct SessionPacket {
  bool from_initiator = false;
  uint64_t capture_order = 0;
  std::vector<uint8_t> tcp_payload;  // may be empty (SYN/ACK/FIN)
};

struct SessionRecord {
  SessionKey key;
  MacAddr initiator_mac{};   // source MAC of the session's first packet
  Endpoint initiator;        // source endpoint of the session's first packet
  std::vector<SessionPacket> packets;  // capture order
};

// One frame decoded down to the transport layer.
struct ParsedFrame {
  MacAddr src_mac{};
  Endpoint src;
  Endpoint dst;
  uint8_t protocol = 0;
  size_t payload_offset = 0;  // TCP payload start within the frame
  size_t payload_len = 0;     // bounded by the IP total length
};

// Ethernet/IPv4/TCP-or-UDP decoder. Returns nullopt for anything else
// (non-IPv4, fragments, short frames).
std::optional<ParsedFrame> parse_frame(std::span<const uint8_t> frame);

struct SplitStats {
  uint64_t frames = 0;
  uint64_t tcp_packets = 0;
  uint64_t udp_packets = 0;
  uint64_t skipped_frames = 0;  // non-IPv4, fragments, truncated frames
  uint64_t udp_flows = 0;       // distinct canonical UDP keys, all discarded
};

// Buckets TCP packets into bidirectional sessions, in order of first
// appearance. UDP and undecodable frames are counted and discarded.
std::vector<SessionRecord> split_sessions(const std::vector<pcap::RawPacket>& packets,
                                          SplitStats* stats = nullptr);

struct MacMap {
  std::map<MacAddr, std::string> labels;
  std::string unmapped_label = "unmapped";
};

// JSON object of MAC string -> device label. Two keys resolving to the same
// MAC are a configuration error.
MacMap load_mac_map(const std::string& path, const std::string& unmapped_label = "unmapped");
MacMap parse_mac_map(const std::string& json_text, const std::string& unmapped_label = "unmapped");

// Groups sessions by the label of their initiator MAC; unmapped MACs fall
// under map.unmapped_label. Session order within a label follows input order.
std::map<std::string, std::vector<const SessionRecord*>> group_by_mac(
    const std::vector<SessionRecord>& sessions, const MacMap& map);

}  // namespace iotprint::flow
