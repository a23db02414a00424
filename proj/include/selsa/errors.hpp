#pragma once

#include <stdexcept>
#include <string>

namespace selsa {

// Shapes or settings that cannot work together (dimension mismatch, empty
// frame set, incompatible checkpoint, bad config key).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad data handed to an otherwise valid computation (label out of range,
// malformed CSV row).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A documented precondition failed (zero-degree node, empty partition side).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace selsa
