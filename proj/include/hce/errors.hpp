#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace hce {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

/// Malformed mesh or field text; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class MaterialError : public Error {
 public:
  using Error::Error;
};

class AssemblyError : public Error {
 public:
  using Error::Error;
};

class SolveError : public Error {
 public:
  using Error::Error;
};

/// A pure-Neumann right-hand side that is not orthogonal to the rigid modes.
class CompatibilityError : public Error {
 public:
  CompatibilityError(const std::string& what, std::array<double, 3> residuals)
      : Error(what), residuals_(residuals) {}
  const std::array<double, 3>& residuals() const noexcept { return residuals_; }

 private:
  std::array<double, 3> residuals_;
};

class ConsistencyError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

/// Invalid study configuration; names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : Error(key + ": " + what), key_(key) {}
  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace hce
