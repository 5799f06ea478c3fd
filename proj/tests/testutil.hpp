#pragma once

// Shared test fixtures: raw Ethernet/IPv4 frame construction, synthetic
// multi-device captures, a finite-difference gradient oracle, and
// self-cleaning temp directories.

#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "iotprint/dataset.hpp"
#include "iotprint/neuralnet.hpp"
#include "iotprint/pcap.hpp"
#include "iotprint/rng.hpp"
#include "iotprint/session.hpp"

namespace testutil {

namespace fs = std::filesystem;
using iotprint::Rng;

// --- filesystem ------------------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<uint64_t> counter{0};
    const uint64_t id = counter.fetch_add(1);
    path_ = fs::temp_directory_path() /
            ("iotprint-test-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(id));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  std::string str() const { return path_.string(); }
  std::string sub(const std::string& name) const { return (path_ / name).string(); }

 private:
  fs::path path_;
};

inline std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// --- frame construction ----------------------------------------------------

struct FrameSpec {
  iotprint::flow::MacAddr src_mac{0x02, 0, 0, 0, 0, 0x01};
  iotprint::flow::MacAddr dst_mac{0x02, 0, 0, 0, 0, 0x02};
  uint32_t src_ip = 0x0A000001;  // host byte order
  uint32_t dst_ip = 0x0A000002;
  uint16_t src_port = 40000;
  uint16_t dst_port = 443;
  uint8_t protocol = iotprint::flow::kProtoTcp;
  std::vector<uint8_t> payload;
  size_t trailer_padding = 0;    // bytes past the IP datagram (Ethernet padding)
  bool more_fragments = false;   // IP MF flag
  uint16_t fragment_offset = 0;  // units of 8 bytes
  uint8_t ip_header_words = 5;   // IHL
  uint8_t tcp_header_words = 5;  // data offset
};

inline void put_be16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v & 0xFF));
}

inline void put_be32(std::vector<uint8_t>& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16 & 0xFF));
  out.push_back(static_cast<uint8_t>(v >> 8 & 0xFF));
  out.push_back(static_cast<uint8_t>(v & 0xFF));
}

inline std::vector<uint8_t> build_frame(const FrameSpec& s) {
  std::vector<uint8_t> f;
  f.insert(f.end(), s.dst_mac.begin(), s.dst_mac.end());
  f.insert(f.end(), s.src_mac.begin(), s.src_mac.end());
  put_be16(f, 0x0800);

  const size_t ip_header = static_cast<size_t>(s.ip_header_words) * 4;
  const bool tcp = s.protocol == iotprint::flow::kProtoTcp;
  const size_t transport_header = tcp ? static_cast<size_t>(s.tcp_header_words) * 4 : 8;
  const size_t total_len = ip_header + transport_header + s.payload.size();

  f.push_back(static_cast<uint8_t>(0x40 | s.ip_header_words));
  f.push_back(0);  // TOS
  put_be16(f, static_cast<uint16_t>(total_len));
  put_be16(f, 0);  // identification
  uint16_t flags_frag = s.fragment_offset & 0x1FFF;
  if (s.more_fragments) flags_frag |= 0x2000;
  put_be16(f, flags_frag);
  f.push_back(64);  // TTL
  f.push_back(s.protocol);
  put_be16(f, 0);  // header checksum (not validated)
  put_be32(f, s.src_ip);
  put_be32(f, s.dst_ip);
  for (size_t i = 20; i < ip_header; ++i) f.push_back(0);  // IP options

  if (tcp) {
    put_be16(f, s.src_port);
    put_be16(f, s.dst_port);
    put_be32(f, 0);  // seq
    put_be32(f, 0);  // ack
    f.push_back(static_cast<uint8_t>(s.tcp_header_words << 4));
    f.push_back(0x18);  // PSH|ACK
    put_be16(f, 0xFFFF);
    put_be16(f, 0);  // checksum
    put_be16(f, 0);  // urgent
    for (size_t i = 20; i < transport_header; ++i) f.push_back(0);  // TCP options
  } else {
    put_be16(f, s.src_port);
    put_be16(f, s.dst_port);
    put_be16(f, static_cast<uint16_t>(8 + s.payload.size()));
    put_be16(f, 0);  // checksum
  }

  f.insert(f.end(), s.payload.begin(), s.payload.end());
  for (size_t i = 0; i < s.trailer_padding; ++i) f.push_back(0);
  return f;
}

inline iotprint::pcap::RawPacket make_packet(uint64_t order, std::vector<uint8_t> frame,
                                             uint32_t ts_sec = 0, uint32_t ts_usec = 0) {
  iotprint::pcap::RawPacket p;
  p.ts_sec = ts_sec;
  p.ts_usec = ts_usec;
  p.capture_order = order;
  p.link_bytes = std::move(frame);
  return p;
}

inline std::vector<iotprint::pcap::RawPacket> make_capture(
    const std::vector<std::vector<uint8_t>>& frames) {
  std::vector<iotprint::pcap::RawPacket> packets;
  packets.reserve(frames.size());
  for (size_t i = 0; i < frames.size(); ++i) {
    packets.push_back(make_packet(i, frames[i], static_cast<uint32_t>(1600000000 + i),
                                  static_cast<uint32_t>(i % 1000000)));
  }
  return packets;
}

// --- synthetic device traffic ----------------------------------------------

// A synthetic device: one MAC, one client IP, and a payload layout whose
// repeating marker bytes keep its fingerprints separable from the other
// profiles. The byte noise floor is deliberately identical across devices so
// the markers carry all of the class signal.
struct DeviceProfile {
  std::string label;
  iotprint::flow::MacAddr mac{};
  uint32_t ip = 0;
  uint8_t magic = 0;
  double mean = 128.0;
  double stddev = 16.0;
};

inline std::vector<DeviceProfile> default_devices(size_t count) {
  std::vector<DeviceProfile> devices;
  for (size_t k = 0; k < count; ++k) {
    DeviceProfile d;
    d.label = "device-" + std::string(1, static_cast<char>('a' + k));
    d.mac = {0x02, 0x00, 0x00, 0x00, 0x00, static_cast<uint8_t>(k + 1)};
    d.ip = 0x0A000100 + static_cast<uint32_t>(k + 1);  // 10.0.1.k+1
    d.magic = static_cast<uint8_t>(0xC0 + k);          // also the marker phase
    devices.push_back(std::move(d));
  }
  return devices;
}

inline uint8_t clamp_byte(double v) {
  if (v < 0.0) return 0;
  if (v > 255.0) return 255;
  return static_cast<uint8_t>(v);
}

// Marker bytes repeating every 16 positions, a stand-in for fixed protocol
// framing. Device k marks phases k and k+1, so adjacent profiles share one
// phase: structure separates the classes, while a held-out middle device
// still overlaps both neighbours instead of collapsing onto one of them.
inline bool marker_at(size_t pos, size_t phase) {
  const size_t slot = pos % 16;
  return slot == phase % 16 || slot == (phase + 1) % 16;
}

// Two data packets (client then server) forming one TCP session. The payload
// opens with the device magic and the session ordinal, so no two sessions of
// a device dedupe into one row; total payload length spans the 784-byte
// boundary so both trimming and zero-padding occur.
inline void append_device_session(std::vector<std::vector<uint8_t>>& frames,
                                  const DeviceProfile& dev, size_t session_index, Rng& rng) {
  const uint32_t server_ip = 0x0A000001;  // 10.0.0.1
  const uint16_t client_port = static_cast<uint16_t>(1024 + session_index);
  const size_t marker_phase = dev.magic % 16;

  const size_t client_len = 300 + rng.uniform_index(300);  // 300..599
  const size_t server_len = 300 + rng.uniform_index(500);  // 300..799

  std::vector<uint8_t> client_payload;
  client_payload.push_back(dev.magic);
  client_payload.push_back(static_cast<uint8_t>(~dev.magic));
  put_be32(client_payload, static_cast<uint32_t>(session_index));
  while (client_payload.size() < client_len) {
    if (marker_at(client_payload.size(), marker_phase)) {
      client_payload.push_back(250);
    } else {
      client_payload.push_back(clamp_byte(rng.normal(dev.mean, dev.stddev)));
    }
  }
  std::vector<uint8_t> server_payload;
  for (size_t i = 0; i < server_len; ++i) {
    if (marker_at(i, marker_phase)) {
      server_payload.push_back(250);
    } else {
      server_payload.push_back(clamp_byte(rng.normal(dev.mean, dev.stddev)));
    }
  }

  FrameSpec c;
  c.src_mac = dev.mac;
  c.dst_mac = {0x02, 0xFF, 0, 0, 0, 0xFE};  // gateway
  c.src_ip = dev.ip;
  c.dst_ip = server_ip;
  c.src_port = client_port;
  c.dst_port = 443;
  c.payload = std::move(client_payload);
  frames.push_back(build_frame(c));

  FrameSpec r;
  r.src_mac = {0x02, 0xFF, 0, 0, 0, 0xFE};
  r.dst_mac = dev.mac;
  r.src_ip = server_ip;
  r.dst_ip = dev.ip;
  r.src_port = 443;
  r.dst_port = client_port;
  r.payload = std::move(server_payload);
  frames.push_back(build_frame(r));
}

// Capture with `sessions_per_device` TCP sessions for each profile,
// interleaved round-robin the way a shared uplink would record them.
inline std::vector<iotprint::pcap::RawPacket> synth_capture(
    const std::vector<DeviceProfile>& devices, size_t sessions_per_device, uint64_t seed) {
  Rng rng(seed);
  std::vector<std::vector<uint8_t>> frames;
  frames.reserve(devices.size() * sessions_per_device * 2);
  for (size_t s = 0; s < sessions_per_device; ++s) {
    for (const auto& dev : devices) {
      append_device_session(frames, dev, s, rng);
    }
  }
  return make_capture(frames);
}

inline std::string mac_map_json(const std::vector<DeviceProfile>& devices) {
  std::string json = "{";
  for (size_t i = 0; i < devices.size(); ++i) {
    if (i) json += ",";
    json += "\"" + iotprint::flow::format_mac(devices[i].mac) + "\":\"" + devices[i].label + "\"";
  }
  json += "}";
  return json;
}

// --- randomized captures and a brute-force session oracle -------------------

// Random frames over a small address pool so canonical-key collisions, both
// flow directions, UDP, garbage, fragments, options and trailers all occur.
inline std::vector<iotprint::pcap::RawPacket> random_capture(Rng& rng, size_t max_packets) {
  const size_t count = 1 + rng.uniform_index(max_packets);
  std::vector<std::vector<uint8_t>> frames;
  frames.reserve(count);
  static const uint16_t kPorts[] = {80, 443, 1000, 2000, 3000};
  for (size_t i = 0; i < count; ++i) {
    const size_t roll = rng.uniform_index(100);
    if (roll < 6) {  // undecodable junk
      std::vector<uint8_t> junk(rng.uniform_index(60));
      for (auto& b : junk) b = static_cast<uint8_t>(rng.uniform_index(256));
      frames.push_back(std::move(junk));
      continue;
    }
    FrameSpec s;
    s.src_mac = {0x02, 0, 0, 0, 0, static_cast<uint8_t>(1 + rng.uniform_index(3))};
    s.dst_mac = {0x02, 0, 0, 0, 0, static_cast<uint8_t>(1 + rng.uniform_index(3))};
    s.src_ip = 0x0A000001 + static_cast<uint32_t>(rng.uniform_index(4));
    s.dst_ip = 0x0A000001 + static_cast<uint32_t>(rng.uniform_index(4));
    s.src_port = kPorts[rng.uniform_index(5)];
    s.dst_port = kPorts[rng.uniform_index(5)];
    s.protocol = roll < 75 ? iotprint::flow::kProtoTcp : iotprint::flow::kProtoUdp;
    s.payload.resize(rng.uniform_index(51));
    for (auto& b : s.payload) b = static_cast<uint8_t>(rng.uniform_index(256));
    if (roll % 7 == 0) s.trailer_padding = 1 + rng.uniform_index(20);
    if (roll >= 90) {  // fragment, skipped by the splitter
      s.more_fragments = rng.uniform_index(2) == 0;
      if (!s.more_fragments) s.fragment_offset = static_cast<uint16_t>(1 + rng.uniform_index(100));
    }
    if (roll % 11 == 0) s.ip_header_words = 6;
    if (s.protocol == iotprint::flow::kProtoTcp && roll % 13 == 0) s.tcp_header_words = 7;
    frames.push_back(build_frame(s));
  }
  return make_capture(frames);
}

// Second, independent implementation of the bidirectional 5-tuple split:
// string keys, two passes, first-appearance ordering.
struct OraclePacket {
  bool from_initiator = false;
  uint64_t capture_order = 0;
  std::vector<uint8_t> payload;
};

struct OracleSession {
  std::string key;
  std::string initiator_mac;
  std::string initiator;
  std::vector<OraclePacket> packets;
};

inline std::vector<OracleSession> brute_force_sessions(
    const std::vector<iotprint::pcap::RawPacket>& packets) {
  namespace flow = iotprint::flow;
  std::vector<std::string> order;
  std::map<std::string, OracleSession> by_key;
  for (const auto& pkt : packets) {
    const auto parsed = flow::parse_frame(pkt.link_bytes);
    if (!parsed || parsed->protocol != flow::kProtoTcp) continue;
    const std::string key =
        flow::format_key(flow::canonical_key(parsed->src, parsed->dst, parsed->protocol));
    auto it = by_key.find(key);
    if (it == by_key.end()) {
      order.push_back(key);
      OracleSession s;
      s.key = key;
      s.initiator_mac = flow::format_mac(parsed->src_mac);
      s.initiator = flow::format_endpoint(parsed->src);
      it = by_key.emplace(key, std::move(s)).first;
    }
    OraclePacket op;
    op.from_initiator = flow::format_endpoint(parsed->src) == it->second.initiator;
    op.capture_order = pkt.capture_order;
    const size_t len =
        std::min(parsed->payload_len, pkt.link_bytes.size() - parsed->payload_offset);
    op.payload.assign(pkt.link_bytes.begin() + static_cast<ptrdiff_t>(parsed->payload_offset),
                      pkt.link_bytes.begin() + static_cast<ptrdiff_t>(parsed->payload_offset + len));
    it->second.packets.push_back(std::move(op));
  }
  std::vector<OracleSession> out;
  out.reserve(order.size());
  for (const std::string& key : order) out.push_back(std::move(by_key[key]));
  return out;
}

// Empty result means the partitions agree exactly.
inline std::string compare_partitions(const std::vector<iotprint::flow::SessionRecord>& got,
                                      const std::vector<OracleSession>& want) {
  namespace flow = iotprint::flow;
  if (got.size() != want.size()) {
    return "session count " + std::to_string(got.size()) + " != " + std::to_string(want.size());
  }
  for (size_t i = 0; i < got.size(); ++i) {
    const auto& g = got[i];
    const auto& w = want[i];
    if (flow::format_key(g.key) != w.key) return "session " + std::to_string(i) + ": key differs";
    if (flow::format_mac(g.initiator_mac) != w.initiator_mac) {
      return "session " + std::to_string(i) + ": initiator MAC differs";
    }
    if (flow::format_endpoint(g.initiator) != w.initiator) {
      return "session " + std::to_string(i) + ": initiator endpoint differs";
    }
    if (g.packets.size() != w.packets.size()) {
      return "session " + std::to_string(i) + ": packet count differs";
    }
    for (size_t p = 0; p < g.packets.size(); ++p) {
      if (g.packets[p].from_initiator != w.packets[p].from_initiator ||
          g.packets[p].capture_order != w.packets[p].capture_order ||
          g.packets[p].tcp_payload != w.packets[p].payload) {
        return "session " + std::to_string(i) + " packet " + std::to_string(p) + " differs";
      }
    }
  }
  return {};
}

// --- gradient oracle ---------------------------------------------------------

// Central finite differences of the mean cross-entropy loss over every weight
// and bias. O(parameters * forward) — small nets only.
inline iotprint::nn::Gradients finite_diff_gradients(iotprint::nn::MlpModel model,
                                                     const iotprint::nn::Matrix& x,
                                                     std::span<const uint8_t> labels,
                                                     double h = 1e-5) {
  namespace nn = iotprint::nn;
  const auto loss_at = [&]() {
    nn::Matrix probs = nn::forward(model, x);
    return nn::cross_entropy(probs, labels);
  };
  nn::Gradients grads;
  grads.dw.resize(model.layers.size());
  grads.db.resize(model.layers.size());
  for (size_t l = 0; l < model.layers.size(); ++l) {
    auto& layer = model.layers[l];
    grads.dw[l] = nn::Matrix(layer.weights.rows(), layer.weights.cols());
    for (size_t i = 0; i < layer.weights.size(); ++i) {
      const double saved = layer.weights.data()[i];
      layer.weights.data()[i] = saved + h;
      const double up = loss_at();
      layer.weights.data()[i] = saved - h;
      const double down = loss_at();
      layer.weights.data()[i] = saved;
      grads.dw[l].data()[i] = (up - down) / (2.0 * h);
    }
    grads.db[l].assign(layer.bias.size(), 0.0);
    for (size_t i = 0; i < layer.bias.size(); ++i) {
      const double saved = layer.bias[i];
      layer.bias[i] = saved + h;
      const double up = loss_at();
      layer.bias[i] = saved - h;
      const double down = loss_at();
      layer.bias[i] = saved;
      grads.db[l][i] = (up - down) / (2.0 * h);
    }
  }
  return grads;
}

// Relative error with a small-magnitude floor so near-zero components compare
// on absolute terms.
inline double rel_error(double a, double b) {
  const double denom = std::max({std::abs(a), std::abs(b), 1e-5});
  return std::abs(a - b) / denom;
}

inline double max_gradient_rel_error(const iotprint::nn::Gradients& analytic,
                                     const iotprint::nn::Gradients& numeric) {
  double worst = 0.0;
  for (size_t l = 0; l < analytic.dw.size(); ++l) {
    for (size_t i = 0; i < analytic.dw[l].size(); ++i) {
      worst = std::max(worst, rel_error(analytic.dw[l].data()[i], numeric.dw[l].data()[i]));
    }
    for (size_t i = 0; i < analytic.db[l].size(); ++i) {
      worst = std::max(worst, rel_error(analytic.db[l][i], numeric.db[l][i]));
    }
  }
  return worst;
}

// --- random labeled datasets -------------------------------------------------

inline iotprint::data::LabeledDataset random_dataset(size_t rows, size_t classes, Rng& rng,
                                                     std::vector<std::string> names = {}) {
  iotprint::data::LabeledDataset ds;
  if (names.empty()) {
    for (size_t c = 0; c < classes; ++c) names.push_back("class-" + std::to_string(c));
  }
  ds.label_names = std::move(names);
  std::vector<uint8_t> row(iotprint::fp::kFingerprintBytes);
  for (size_t r = 0; r < rows; ++r) {
    for (auto& b : row) b = static_cast<uint8_t>(rng.uniform_index(256));
    ds.append_row(row, static_cast<uint8_t>(rng.uniform_index(classes)));
  }
  return ds;
}

}  // namespace testutil
