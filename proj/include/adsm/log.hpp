#pragma once

#include <atomic>
#include <cstdio>
#include <mutex>
#include <sstream>
#include <string>

namespace adsm::log {

enum class Level : int { kDebug = 0, kInfo = 1, kWarn = 2, kError = 3, kOff = 4 };

inline std::atomic<Level>& level() {
  static std::atomic<Level> lvl{Level::kWarn};
  return lvl;
}

inline bool parse_level(const std::string& name, Level& out) {
  if (name == "debug") out = Level::kDebug;
  else if (name == "info") out = Level::kInfo;
  else if (name == "warn") out = Level::kWarn;
  else if (name == "error") out = Level::kError;
  else if (name == "off") out = Level::kOff;
  else return false;
  return true;
}

namespace detail {

inline std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

template <typename... Args>
void emit(Level lvl, const char* tag, Args&&... args) {
  if (lvl < level().load(std::memory_order_relaxed)) return;
  std::ostringstream oss;
  (oss << ... << args);
  std::lock_guard<std::mutex> lock(sink_mutex());
  std::fprintf(stderr, "[%s] %s\n", tag, oss.str().c_str());
}

}  // namespace detail

template <typename... Args>
void debug(Args&&... args) {
  detail::emit(Level::kDebug, "debug", std::forward<Args>(args)...);
}

template <typename... Args>
void info(Args&&... args) {
  detail::emit(Level::kInfo, "info", std::forward<Args>(args)...);
}

template <typename... Args>
void warn(Args&&... args) {
  detail::emit(Level::kWarn, "warn", std::forward<Args>(args)...);
}

template <typename... Args>
void error(Args&&... args) {
  detail::emit(Level::kError, "error", std::forward<Args>(args)...);
}

}  // namespace adsm::log
