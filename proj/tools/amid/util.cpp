#include "util.hpp"

#include <cstdlib>

namespace amid::cli {

namespace {

LogLevel parse_level_from_env() {
  const char* raw = std::getenv("AMID_LOG_LEVEL");
  if (raw == nullptr) return LogLevel::kError;
  const std::string value(raw);
  if (value == "error") return LogLevel::kError;
  if (value == "info") return LogLevel::kInfo;
  if (value == "debug") return LogLevel::kDebug;
  throw ConfigError("AMID_LOG_LEVEL must be one of error, info, debug (got '" +
                    value + "')");
}

}  // namespace

LogLevel log_level() {
  static const LogLevel level = parse_level_from_env();
  return level;
}

void log_error(const std::string& message) {
  std::fprintf(stderr, "[amid][error] %s\n", message.c_str());
}

void log_info(const std::string& message) {
  if (log_level() >= LogLevel::kInfo) {
    std::fprintf(stderr, "[amid][info] %s\n", message.c_str());
  }
}

void log_debug(const std::string& message) {
  if (log_level() >= LogLevel::kDebug) {
    std::fprintf(stderr, "[amid][debug] %s\n", message.c_str());
  }
}

}  // namespace amid::cli
