#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cbsir {

/// Thrown when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a session, image or file referenced by id does not exist.
class NotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or truncated index file. `offset()` is the byte position at
/// which parsing failed.
class IndexFormatError : public std::runtime_error {
 public:
  IndexFormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

}  // namespace cbsir
