#ifndef NAUM_ERRORS_HPP
#define NAUM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace naum {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Shape mismatch between operands.
class InvalidDimensions : public Error {
 public:
  using Error::Error;
};

// NaN or Inf where finite values are required.
class NonFiniteInput : public Error {
 public:
  using Error::Error;
};

// Scalar parameter outside its admissible range.
class InvalidParameter : public Error {
 public:
  using Error::Error;
};

// Update scheme incompatible with the regularizer it is asked to handle.
class UnsupportedScheme : public Error {
 public:
  using Error::Error;
};

// Starting point has infinite objective value.
class InfeasibleInitialization : public Error {
 public:
  using Error::Error;
};

// Malformed input file; message carries file name and line number.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Structurally valid data that violates a model requirement.
class InvalidData : public Error {
 public:
  using Error::Error;
};

// Malformed benchmark configuration.
class InvalidConfig : public Error {
 public:
  using Error::Error;
};

// A benchmark trial failed; message carries the (algorithm, seed) pair.
class TrialFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace naum

#endif
