#pragma once

#include <stdexcept>
#include <string>

namespace codetree {

// Base of every error thrown by the library. Index errors use std::out_of_range.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input configuration. `field()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

// An operation was called outside its documented precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// A node/coding budget would be exceeded.
class ResourceError : public Error {
 public:
  using Error::Error;
};

class UnsupportedModelError : public Error {
 public:
  using Error::Error;
};

// Neck search reached its horizon without finding a neck.
class HorizonError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

// Operation needs geometry (or another optional input) that was not configured.
class DependencyError : public Error {
 public:
  using Error::Error;
};

class ExtinctionError : public Error {
 public:
  using Error::Error;
};

}  // namespace codetree
