/**
 * @file error.hpp
 * @brief Exception hierarchy shared by all homdip modules.
 *
 * Each class maps onto one CLI exit code: ConfigError -> 2, IoError and
 * FormatError -> 3, NumericalError -> 4.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace homdip {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or configuration documents. `key_path` names the
/// offending field ("source_a.mu") when the error came from a document.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what, std::string key_path = {})
      : Error(key_path.empty() ? what : key_path + ": " + what),
        key_path_(std::move(key_path)), detail_(what) {}

  const std::string& key_path() const noexcept { return key_path_; }
  /// Message without the key path prefix.
  const std::string& detail() const noexcept { return detail_; }

private:
  std::string key_path_;
  std::string detail_;
};

class IoError : public Error {
public:
  using Error::Error;
};

/// Malformed time-tag data.
class FormatError : public IoError {
public:
  enum class Kind { bad_magic, version_mismatch, truncated_header, truncated_record, unsorted, bad_csv };

  FormatError(Kind kind, const std::string& what) : IoError(what), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

private:
  Kind kind_;
};

class NumericalError : public Error {
public:
  using Error::Error;
};

} // namespace homdip
