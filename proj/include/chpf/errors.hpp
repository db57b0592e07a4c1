#pragma once

#include <stdexcept>
#include <string>

namespace chpf {

/// Invalid configuration; `key()` names the offending setting.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, std::string message)
      : std::runtime_error(key + ": " + message), key_(std::move(key)), message_(std::move(message)) {}

  [[nodiscard]] const std::string& key() const { return key_; }
  [[nodiscard]] const std::string& message() const { return message_; }

 private:
  std::string key_;
  std::string message_;
};

/// An observation model returned a value outside its contract (negative or non-finite).
class ModelContractError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace chpf
