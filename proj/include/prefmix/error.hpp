#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace prefmix {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data. `line` is 1-based, 0 when not tied to a line.
struct InputError : Error {
  InputError(std::string const& what, std::string source = {}, std::size_t line = 0)
      : Error(format(what, source, line)), source(std::move(source)), line(line) {}

  std::string source;
  std::size_t line;

 private:
  static std::string format(std::string const& what, std::string const& source, std::size_t line) {
    std::string msg;
    if (!source.empty()) msg += source;
    if (line != 0) msg += (msg.empty() ? "line " : ":") + std::to_string(line);
    if (!msg.empty()) msg += ": ";
    return msg + what;
  }
};

/// Argument outside the supported numerical domain.
struct DomainError : Error {
  using Error::Error;
};

/// An optimizer or posterior computation could not produce a usable answer.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace prefmix
