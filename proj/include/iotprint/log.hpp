#pragma once

#include <sstream>
#include <string>

namespace iotprint::log {

enum class Level { debug = 0, info = 1, warn = 2, quiet = 3 };

// Threshold comes from the IOTPRINT_LOG environment variable
// (debug|info|warn|quiet), default info.
Level threshold();
void set_threshold(Level level);
bool enabled(Level level);
void write(Level level, const std::string& msg);

namespace detail {
template <typename... Args>
std::string concat(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}
}  // namespace detail

template <typename... Args>
void debug(Args&&... args) {
  if (enabled(Level::debug)) write(Level::debug, detail::concat(std::forward<Args>(args)...));
}
template <typename... Args>
void info(Args&&... args) {
  if (enabled(Level::info)) write(Level::info, detail::concat(std::forward<Args>(args)...));
}
template <typename... Args>
void warn(Args&&... args) {
  if (enabled(Level::warn)) write(Level::warn, detail::concat(std::forward<Args>(args)...));
}

}  // namespace iotprint::log
