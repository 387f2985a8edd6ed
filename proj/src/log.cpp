#include "pcbf/log.hpp"

#include <cstdlib>
#include <iostream>
#include <mutex>
#include <string_view>

namespace pcbf {

LogLevel log_threshold() {
  static const LogLevel level = [] {
    const char* env = std::getenv("PCBF_LOG");
    const std::string_view v = env ? env : "";
    if (v == "error") return LogLevel::Error;
    if (v == "info") return LogLevel::Info;
    if (v == "debug") return LogLevel::Debug;
    return LogLevel::Warn;
  }();
  return level;
}

void log(LogLevel level, const std::string& msg) {
  if (level > log_threshold()) return;
  static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
  static std::mutex mutex;
  const std::lock_guard<std::mutex> lock(mutex);
  std::cerr << "[pcbf " << kNames[static_cast<int>(level)] << "] " << msg << '\n';
}

}  // namespace pcbf
