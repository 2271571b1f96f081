#pragma once
// Shared command line plumbing: logging, file IO, number formatting.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace amid::cli {

// Raised for anything that should terminate with the bad-config exit code.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for runtime numerical failures (exit code 3).
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogLevel { kError = 0, kInfo = 1, kDebug = 2 };

LogLevel log_level();

void log_info(const std::string& message);
void log_debug(const std::string& message);
void log_error(const std::string& message);

// 17 significant digits; round-trips any double exactly.
inline std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  out << body;
  if (!out) throw ConfigError("failed writing: " + path);
}

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json parsed;
  try {
    in >> parsed;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  return parsed;
}

// A trajectory/table writer with a versioned schema comment first line.
class CsvWriter {
 public:
  CsvWriter(std::string schema_name, std::string columns)
      : columns_(std::move(columns)) {
    body_ << "# schema: " << schema_name << " columns=" << columns_ << "\n";
    body_ << columns_ << "\n";
  }

  template <typename... Fields>
  void row(const Fields&... fields) {
    bool first = true;
    ((body_ << (first ? "" : ","), first = false, append(fields)), ...);
    body_ << "\n";
  }

  std::string str() const { return body_.str(); }

 private:
  void append(double value) { body_ << format_double(value); }
  void append(int value) { body_ << value; }
  void append(const std::string& value) { body_ << value; }
  void append(const char* value) { body_ << value; }

  std::string columns_;
  std::ostringstream body_;
};

}  // namespace amid::cli
