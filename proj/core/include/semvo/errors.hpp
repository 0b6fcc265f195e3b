#pragma once

#include <stdexcept>
#include <string>

namespace semvo {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Missing/unreadable/unwritable files or malformed on-disk records (CLI exit code 3).
class IoError : public Error {
 public:
  using Error::Error;
};

// Factorization failure, non-finite values, damping escalation exhausted (CLI exit code 4).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class NonPositiveDepth : public Error {
 public:
  using Error::Error;
};

class RowOutOfRange : public Error {
 public:
  using Error::Error;
};

class DuplicateFrameId : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class GaugeUnconstrained : public Error {
 public:
  using Error::Error;
};

class UnknownKeyframe : public Error {
 public:
  using Error::Error;
};

class InsufficientPoints : public Error {
 public:
  using Error::Error;
};

class DegenerateConfiguration : public Error {
 public:
  using Error::Error;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace semvo
