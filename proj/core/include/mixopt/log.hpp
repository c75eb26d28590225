#pragma once

#include <string_view>

namespace mixopt {

enum class LogLevel { kError = 0, kWarn = 1, kInfo = 2, kDebug = 3 };

/// Threshold parsed once from the MIXOPT_LOG environment variable
/// ("error" | "warn" | "info" | "debug", or 0-3). Defaults to warn.
LogLevel log_threshold();

void log_message(LogLevel level, std::string_view message);

inline void log_error(std::string_view m) { log_message(LogLevel::kError, m); }
inline void log_warn(std::string_view m) { log_message(LogLevel::kWarn, m); }
inline void log_info(std::string_view m) { log_message(LogLevel::kInfo, m); }
inline void log_debug(std::string_view m) { log_message(LogLevel::kDebug, m); }

}  // namespace mixopt
