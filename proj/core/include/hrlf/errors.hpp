#pragma once

#include <stdexcept>
#include <string>

namespace hrlf {

/// Base for every error raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Array shapes disagree with a manifest or another operand.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Stored bytes do not match their recorded CRC32.
class ChecksumError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss or activation.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace hrlf
