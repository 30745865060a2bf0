#pragma once

#include <stdexcept>
#include <string>

namespace dsgan {

// Invalid user input: bad configuration values, incompatible shapes, wrong
// file formats. The CLI maps these to exit code 1.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A file exists but cannot be decoded.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VersionError : public FormatError {
 public:
  using FormatError::FormatError;
};

// Training produced a non-finite loss.
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dsgan
