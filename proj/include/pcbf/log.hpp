#pragma once

#include <string>

namespace pcbf {

enum class LogLevel { Error = 0, Warn = 1, Info = 2, Debug = 3 };

/// Threshold from PCBF_LOG (error, warn, info, debug). Defaults to warn.
LogLevel log_threshold();

void log(LogLevel level, const std::string& msg);

}  // namespace pcbf
