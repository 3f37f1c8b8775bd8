#pragma once

#include <stdexcept>
#include <string>

namespace quadshape {

// Base of everything the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input or a violated precondition (maps to CLI exit code 2).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A solve, flow or eigensolve that could not be completed (CLI exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace quadshape
