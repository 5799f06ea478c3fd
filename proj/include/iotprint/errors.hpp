#pragma once

#include <stdexcept>
#include <string>

namespace iotprint {

// Bad flags, bad config files, inconsistent options. CLI exit code 1.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data (pcap, IDX, JSON payloads). CLI exit code 2.
struct FormatError : std::runtime_error {
  explicit FormatError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace iotprint
