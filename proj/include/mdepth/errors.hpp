#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mdepth {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input outside the mathematical domain of an operation (fx <= 0, ray behind
// the camera, zero-area crop, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Well-formed input that leaves nothing to compute on (empty masks, all
// patches skipped, fewer than two valid pixels).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// Caller mixed incompatible arguments (shape mismatch, bad flag values).
class UsageError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what + " (at byte " + std::to_string(byte_offset) + ")"),
        offset_(byte_offset) {}

  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

// Non-fatal diagnostics go through here so tests can silence or capture them.
void warn(const std::string& message);
using WarningSink = void (*)(const std::string&);
WarningSink set_warning_sink(WarningSink sink);

}  // namespace mdepth
