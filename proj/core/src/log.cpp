#include "mixopt/log.hpp"

#include <cstdlib>
#include <iostream>
#include <string>

namespace mixopt {

namespace {

LogLevel parse_threshold() {
    const char* env = std::getenv("MIXOPT_LOG");
    if (!env) return LogLevel::kWarn;
    const std::string v(env);
    if (v == "error" || v == "0") return LogLevel::kError;
    if (v == "warn" || v == "1") return LogLevel::kWarn;
    if (v == "info" || v == "2") return LogLevel::kInfo;
    if (v == "debug" || v == "3") return LogLevel::kDebug;
    return LogLevel::kWarn;
}

const char* level_name(LogLevel level) {
    switch (level) {
        case LogLevel::kError: return "error";
        case LogLevel::kWarn: return "warn";
        case LogLevel::kInfo: return "info";
        case LogLevel::kDebug: return "debug";
    }
    return "?";
}

}  // namespace

LogLevel log_threshold() {
    static const LogLevel threshold = parse_threshold();
    return threshold;
}

void log_message(LogLevel level, std::string_view message) {
    if (static_cast<int>(level) > static_cast<int>(log_threshold())) return;
    std::cerr << "[mixopt:" << level_name(level) << "] " << message << '\n';
}

}  // namespace mixopt
