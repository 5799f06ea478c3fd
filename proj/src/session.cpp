#include "iotprint/session.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "iotprint/errors.hpp"

namespace iotprint::flow {

namespace {

constexpr size_t kEthernetHeaderSize = 14;
constexpr uint16_t kEtherTypeIpv4 = 0x0800;

uint16_t be16(const uint8_t* p) { return static_cast<uint16_t>(p[0] << 8 | p[1]); }
uint32_t be32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) << 24 | static_cast<uint32_t>(p[1]) << 16 |
         static_cast<uint32_t>(p[2]) << 8 | static_cast<uint32_t>(p[3]);
}

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::string format_mac(const MacAddr& mac) {
  char buf[18];
  std::snprintf(buf, sizeof(buf), "%02x:%02x:%02x:%02x:%02x:%02x", mac[0], mac[1], mac[2],
                mac[3], mac[4], mac[5]);
  return buf;
}

std::optional<MacAddr> parse_mac(const std::string& text) {
  if (text.size() != 17) return std::nullopt;
  MacAddr mac{};
  for (size_t i = 0; i < 6; ++i) {
    const size_t pos = i * 3;
    const int hi = hex_digit(text[pos]);
    const int lo = hex_digit(text[pos + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    if (i < 5 && text[pos + 2] != ':' && text[pos + 2] != '-') return std::nullopt;
    mac[i] = static_cast<uint8_t>(hi << 4 | lo);
  }
  return mac;
}

std::string format_endpoint(const Endpoint& ep) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u:%u", ep.ip >> 24 & 0xFF, ep.ip >> 16 & 0xFF,
                ep.ip >> 8 & 0xFF, ep.ip & 0xFF, ep.port);
  return buf;
}

SessionKey canonical_key(const Endpoint& src, const Endpoint& dst, uint8_t protocol) {
  SessionKey key;
  key.protocol = protocol;
  if (src <= dst) {
    key.lo = src;
    key.hi = dst;
  } else {
    key.lo = dst;
    key.hi = src;
  }
  return key;
}

std::string format_key(const SessionKey& key) {
  std::string proto = key.protocol == kProtoTcp   ? "tcp"
                      : key.protocol == kProtoUdp ? "udp"
                                                  : std::to_string(key.protocol);
  return proto + " " + format_endpoint(key.lo) + "<->" + format_endpoint(key.hi);
}

std::optional<ParsedFrame> parse_frame(std::span<const uint8_t> frame) {
  if (frame.size() < kEthernetHeaderSize) return std::nullopt;
  if (be16(frame.data() + 12) != kEtherTypeIpv4) return std::nullopt;

  const uint8_t* ip = frame.data() + kEthernetHeaderSize;
  const size_t ip_avail = frame.size() - kEthernetHeaderSize;
  if (ip_avail < 20) return std::nullopt;
  if ((ip[0] >> 4) != 4) return std::nullopt;
  const size_t ihl = static_cast<size_t>(ip[0] & 0x0F) * 4;
  if (ihl < 20 || ip_avail < ihl) return std::nullopt;

  // Fragments past the first carry no transport header; fragmented first
  // pieces are skipped too (reassembly is out of scope).
  const uint16_t flags_frag = be16(ip + 6);
  const bool more_fragments = (flags_frag & 0x2000) != 0;
  const uint16_t frag_offset = flags_frag & 0x1FFF;
  if (frag_offset != 0 || more_fragments) return std::nullopt;

  ParsedFrame out;
  std::copy(frame.begin() + 6, frame.begin() + 12, out.src_mac.begin());
  out.protocol = ip[9];
  out.src.ip = be32(ip + 12);
  out.dst.ip = be32(ip + 16);
  const size_t ip_total_len = be16(ip + 2);

  const uint8_t* transport = ip + ihl;
  const size_t transport_avail = ip_avail - ihl;
  if (out.protocol == kProtoTcp) {
    if (transport_avail < 20) return std::nullopt;
    out.src.port = be16(transport);
    out.dst.port = be16(transport + 2);
    const size_t data_offset = static_cast<size_t>(transport[12] >> 4) * 4;
    if (data_offset < 20 || transport_avail < data_offset) return std::nullopt;
    out.payload_offset = kEthernetHeaderSize + ihl + data_offset;
    // Bound by the IP total length so Ethernet trailer padding is excluded.
    const size_t ip_end =
        kEthernetHeaderSize + std::min(ip_total_len < ihl ? ihl : ip_total_len, ip_avail);
    out.payload_len = ip_end > out.payload_offset ? ip_end - out.payload_offset : 0;
    return out;
  }
  if (out.protocol == kProtoUdp) {
    if (transport_avail < 8) return std::nullopt;
    out.src.port = be16(transport);
    out.dst.port = be16(transport + 2);
    return out;
  }
  return std::nullopt;
}

std::vector<SessionRecord> split_sessions(const std::vector<pcap::RawPacket>& packets,
                                          SplitStats* stats) {
  std::vector<SessionRecord> sessions;
  std::map<SessionKey, size_t> index;
  std::set<SessionKey> udp_keys;
  SplitStats local;

  for (const pcap::RawPacket& pkt : packets) {
    ++local.frames;
    const std::optional<ParsedFrame> parsed = parse_frame(pkt.link_bytes);
    if (!parsed) {
      ++local.skipped_frames;
      continue;
    }
    const SessionKey key = canonical_key(parsed->src, parsed->dst, parsed->protocol);
    if (parsed->protocol == kProtoUdp) {
      ++local.udp_packets;
      udp_keys.insert(key);
      continue;
    }
    ++local.tcp_packets;

    auto [it, created] = index.try_emplace(key, sessions.size());
    if (created) {
      SessionRecord rec;
      rec.key = key;
      rec.initiator_mac = parsed->src_mac;
      rec.initiator = parsed->src;
      sessions.push_back(std::move(rec));
    }
    SessionRecord& rec = sessions[it->second];

    SessionPacket sp;
    sp.from_initiator = parsed->src == rec.initiator;
    sp.capture_order = pkt.capture_order;
    const size_t len = std::min(parsed->payload_len, pkt.link_bytes.size() - parsed->payload_offset);
    sp.tcp_payload.assign(pkt.link_bytes.begin() + static_cast<ptrdiff_t>(parsed->payload_offset),
                          pkt.link_bytes.begin() + static_cast<ptrdiff_t>(parsed->payload_offset + len));
    rec.packets.push_back(std::move(sp));
  }

  local.udp_flows = udp_keys.size();
  if (stats != nullptr) *stats = local;
  return sessions;
}

MacMap parse_mac_map(const std::string& json_text, const std::string& unmapped_label) {
  size_t key_events = 0;
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(
        json_text, [&key_events](int, nlohmann::json::parse_event_t event, nlohmann::json&) {
          if (event == nlohmann::json::parse_event_t::key) ++key_events;
          return true;
        });
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(std::string("mac map: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("mac map: expected a JSON object of MAC -> label");
  if (key_events != doc.size()) throw ConfigError("mac map: duplicate MAC keys");

  MacMap map;
  map.unmapped_label = unmapped_label;
  for (const auto& [key, value] : doc.items()) {
    const std::optional<MacAddr> mac = parse_mac(key);
    if (!mac) throw ConfigError("mac map: malformed MAC address '" + key + "'");
    if (!value.is_string()) throw ConfigError("mac map: label for " + key + " must be a string");
    const auto [it, inserted] = map.labels.emplace(*mac, value.get<std::string>());
    if (!inserted) throw ConfigError("mac map: duplicate MAC address " + format_mac(*mac));
  }
  return map;
}

MacMap load_mac_map(const std::string& path, const std::string& unmapped_label) {
  std::ifstream in(path);
  if (!in) throw ConfigError("mac map: cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_mac_map(buf.str(), unmapped_label);
}

std::map<std::string, std::vector<const SessionRecord*>> group_by_mac(
    const std::vector<SessionRecord>& sessions, const MacMap& map) {
  std::map<std::string, std::vector<const SessionRecord*>> groups;
  for (const SessionRecord& rec : sessions) {
    const auto it = map.labels.find(rec.initiator_mac);
    const std::string& label = it != map.labels.end() ? it->second : map.unmapped_label;
    groups[label].push_back(&rec);
  }
  return groups;
}

}  // namespace iotprint::flow
