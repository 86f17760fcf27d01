#ifndef D2S_ERROR_H_
#define D2S_ERROR_H_

#include <stdexcept>
#include <string>

namespace d2s {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input (files, labels, configuration). The CLI maps
// these to exit code 2.
class InputError : public Error {
 public:
  using Error::Error;
};

// Tensor or layer dimensions that do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

}  // namespace d2s

#endif  // D2S_ERROR_H_
