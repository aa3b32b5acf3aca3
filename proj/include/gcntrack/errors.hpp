#pragma once

#include <stdexcept>
#include <string>

namespace gcntrack {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent caller input (dimensions, indices, files).
class InputError : public Error {
 public:
  using Error::Error;
};

/// A parameter outside its admissible range.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A factorization or normalization that cannot be carried out.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// A file whose bytes do not follow the expected format.
class FormatError : public InputError {
 public:
  using InputError::InputError;
};

}  // namespace gcntrack
