#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dica {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes, alphabet sizes or indices that do not line up.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// A product of messages vanished everywhere: the injected evidence is
// impossible under the model.
class ContradictoryEvidence : public Error {
 public:
  using Error::Error;
};

class CapacityError : public Error {
 public:
  using Error::Error;
};

class MissingLabelBlock : public Error {
 public:
  using Error::Error;
};

// Value-level precondition violations (non-stochastic rows, empty inputs...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  explicit FormatError(const std::string& what) : Error(what) {}

  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_ = 0;
};

}  // namespace dica
