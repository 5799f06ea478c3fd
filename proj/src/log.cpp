#include "iotprint/log.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace iotprint::log {

namespace {

Level parse_env() {
  const char* v = std::getenv("IOTPRINT_LOG");
  if (v == nullptr) return Level::info;
  if (std::strcmp(v, "debug") == 0) return Level::debug;
  if (std::strcmp(v, "info") == 0) return Level::info;
  if (std::strcmp(v, "warn") == 0) return Level::warn;
  if (std::strcmp(v, "quiet") == 0) return Level::quiet;
  return Level::info;
}

Level g_threshold = parse_env();

const char* tag(Level level) {
  switch (level) {
    case Level::debug: return "debug";
    case Level::info: return "info";
    case Level::warn: return "warn";
    default: return "";
  }
}

}  // namespace

Level threshold() { return g_threshold; }
void set_threshold(Level level) { g_threshold = level; }
bool enabled(Level level) { return level >= g_threshold && level != Level::quiet; }

void write(Level level, const std::string& msg) {
  std::fprintf(stderr, "[%s] %s\n", tag(level), msg.c_str());
}

}  // namespace iotprint::log
