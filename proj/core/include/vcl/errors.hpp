#pragma once

#include <stdexcept>
#include <string>

namespace vcl {

/// Invalid user input: bad mesh size, malformed config, dimension mismatch.
class InputError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A linear solve, factorization or loss evaluation produced an unusable result.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace vcl
