#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace reef {

// Bad argument or violated precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Unreadable, malformed or missing input data.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Collects non-fatal warnings produced while processing; every warning is
// also forwarded to the process logger.
class Diagnostics {
 public:
  void warn(std::string message);
  const std::vector<std::string>& warnings() const { return warnings_; }
  bool empty() const { return warnings_.empty(); }

 private:
  std::vector<std::string> warnings_;
};

// Emits through `diag` when given, else straight to the logger.
void warn(Diagnostics* diag, std::string message);

}  // namespace reef
