#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace stego {

// Single exception type for the whole library. The kind tells callers (and
// the CLI exit-code mapping) what class of failure occurred; the message
// names the offending values.
class Error : public std::runtime_error {
 public:
  enum class Kind {
    shape_mismatch,    // tensor/image dimensions disagree
    invalid_argument,  // value-level precondition violated
    capacity,          // payload does not fit the carrier
    io,                // file system / stream failure
    format,            // malformed or unsupported file content
    config,            // bad configuration value or key
  };

  Error(Kind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

[[noreturn]] inline void fail(Error::Kind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace stego
