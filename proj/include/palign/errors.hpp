#pragma once

#include <stdexcept>
#include <string>

namespace palign {

// Error categories map 1:1 onto CLI exit codes.
enum class ErrorCategory : int {
  Config = 2,
  Data = 3,
  Oracle = 4,
  Estimation = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string message)
      : std::runtime_error(std::move(message)), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(std::string message)
      : Error(ErrorCategory::Config, std::move(message)) {}
};

class DataError : public Error {
 public:
  explicit DataError(std::string message)
      : Error(ErrorCategory::Data, std::move(message)) {}
};

class EstimationError : public Error {
 public:
  explicit EstimationError(std::string message)
      : Error(ErrorCategory::Estimation, std::move(message)) {}
};

class OracleError : public Error {
 public:
  enum class Kind { Transport, ResponseFormat };

  OracleError(Kind kind, std::string message, std::string raw_response = {})
      : Error(ErrorCategory::Oracle, std::move(message)),
        kind_(kind),
        raw_response_(std::move(raw_response)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  Kind kind_;
  std::string raw_response_;
};

}  // namespace palign
