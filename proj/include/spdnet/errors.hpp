#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace spdnet {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Spectral function evaluated outside its domain (e.g. log of a
// non-positive eigenvalue). Carries the offending eigenvalue.
class SpectralDomainError : public Error {
 public:
  SpectralDomainError(const std::string& what, double eigenvalue)
      : Error(what), eigenvalue_(eigenvalue) {}
  double eigenvalue() const { return eigenvalue_; }

 private:
  double eigenvalue_;
};

class RankError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& file, std::size_t line, const std::string& msg)
      : Error(file + ":" + std::to_string(line) + ": " + msg),
        file_(file),
        line_(line) {}
  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace spdnet
