#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace ncdrec {

/// Broad failure classes; the CLI maps each one to a process exit code.
enum class ErrorKind { usage, data, numerical };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

/// Malformed input file. Carries the 1-based line number (0 when the whole file is at fault).
class ParseError : public Error {
public:
  ParseError(const std::string& path, std::size_t line, const std::string& msg)
      : Error(ErrorKind::data, path + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

/// The data violates an assumption the model relies on (empty users, negative ratings, ...).
class ModelAssumptionError : public Error {
public:
  explicit ModelAssumptionError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

class ReferenceError : public Error {
public:
  explicit ReferenceError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

class CoverError : public Error {
public:
  explicit CoverError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

class ProtocolError : public Error {
public:
  explicit ProtocolError(const std::string& msg) : Error(ErrorKind::data, msg) {}
};

class ParameterError : public Error {
public:
  explicit ParameterError(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

class DimensionError : public Error {
public:
  explicit DimensionError(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

/// Iterative method ran out of iterations. `residuals` holds the best values reached.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& msg, std::vector<double> residuals)
      : Error(ErrorKind::numerical, msg), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const noexcept { return residuals_; }

private:
  std::vector<double> residuals_;
};

/// Problem too large for a dense method; callers may skip the method.
class CapacityError : public Error {
public:
  explicit CapacityError(const std::string& msg) : Error(ErrorKind::usage, msg) {}
};

/// A linear system that must be nonsingular is not (e.g. Laplacian of a disconnected graph).
class SingularityError : public Error {
public:
  explicit SingularityError(const std::string& msg) : Error(ErrorKind::numerical, msg) {}
};

}  // namespace ncdrec
