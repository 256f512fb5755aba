#pragma once

#include <stdexcept>
#include <string>

namespace platenet {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor shapes incompatible with the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Element count overflow or otherwise unrepresentable size.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Invalid argument value (non-binary label, threshold out of range, ...).
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Operation called out of order (e.g. pool backward before forward).
class StateError : public Error {
 public:
  using Error::Error;
};

// Layer chain cannot be instantiated for the given input size.
class BuildError : public Error {
 public:
  using Error::Error;
};

// Filesystem / decoding failures.
class IoError : public Error {
 public:
  using Error::Error;
};

// Weight file is malformed (bad magic, version, truncation, checksum).
// `offset` is the byte position where parsing failed.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_ = 0;
};

// Weight file parsed but its contents are internally inconsistent.
class StructureError : public Error {
 public:
  using Error::Error;
};

}  // namespace platenet
