#pragma once

#include <stdexcept>
#include <string>

namespace coldstart {

// Exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 2,
  kData = 3,
  kInvariant = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& module, const std::string& message)
      : std::runtime_error(module + ": " + message), code_(code) {}

  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

// Bad flags, bad configuration values, bad call arguments.
class UsageError : public Error {
 public:
  UsageError(const std::string& module, const std::string& message)
      : Error(ExitCode::kUsage, module, message) {}
};

// Malformed or inconsistent input data.
class DataError : public Error {
 public:
  DataError(const std::string& module, const std::string& message)
      : Error(ExitCode::kData, module, message) {}
};

// An internal consistency check failed.
class InvariantError : public Error {
 public:
  InvariantError(const std::string& module, const std::string& message)
      : Error(ExitCode::kInvariant, module, message) {}
};

}  // namespace coldstart
