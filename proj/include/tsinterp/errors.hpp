#pragma once

#include <stdexcept>
#include <string>

namespace tsinterp {

/// Bad input data, configuration, or arguments. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violation of the external-model wire protocol (handshake, ids, shapes).
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or a singular system encountered during computation.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tsinterp
