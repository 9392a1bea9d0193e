#ifndef LBPS_ERROR_HPP
#define LBPS_ERROR_HPP

#include <cstddef>
#include <exception>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lbps {

enum class ErrorKind {
  InvalidArgument,
  Validation,
  Numerical,
  Io,
  Conflict,
  NotFound,
};

/// Base of every error raised by the library. `code()` is a stable
/// machine-readable tag (e.g. "complement_violation"); `exit_code()` maps
/// the kind onto the CLI exit-code contract.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string code, const std::string& message)
      : std::runtime_error(message), kind_(kind), code_(std::move(code)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& code() const noexcept { return code_; }

  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::Numerical: return 3;
      case ErrorKind::Io: return 4;
      default: return 2;
    }
  }

private:
  ErrorKind kind_;
  std::string code_;
};

class InvalidArgument : public Error {
public:
  explicit InvalidArgument(const std::string& message, std::string code = "invalid_argument")
      : Error(ErrorKind::InvalidArgument, std::move(code), message) {}
};

/// Input data violates a format or invariant. Carries the offending file and
/// 1-based line when the data came from disk (line 0 = whole file).
class ValidationError : public Error {
public:
  ValidationError(std::string code, const std::string& message, std::string file = {},
                  std::size_t line = 0)
      : Error(ErrorKind::Validation, std::move(code),
              file.empty() ? message
                           : file + ":" + std::to_string(line) + ": " + message),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const noexcept { return file_; }
  std::size_t line() const noexcept { return line_; }

private:
  std::string file_;
  std::size_t line_;
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& message, std::string code = "numerical")
      : Error(ErrorKind::Numerical, std::move(code), message) {}
};

class IoError : public Error {
public:
  IoError(const std::string& message, std::string path)
      : Error(ErrorKind::Io, "io", message + ": " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

private:
  std::string path_;
};

class ConflictError : public Error {
public:
  explicit ConflictError(const std::string& message)
      : Error(ErrorKind::Conflict, "conflict", message) {}
};

class NotFoundError : public Error {
public:
  explicit NotFoundError(const std::string& message)
      : Error(ErrorKind::NotFound, "not_found", message) {}
};

/// The comparison graph of a PCM splits into several components.
class DisconnectedGraphError : public Error {
public:
  explicit DisconnectedGraphError(std::vector<std::vector<Eigen::Index>> components)
      : Error(ErrorKind::Validation, "disconnected_graph", describe(components)),
        components_(std::move(components)) {}

  const std::vector<std::vector<Eigen::Index>>& components() const noexcept {
    return components_;
  }

private:
  static std::string describe(const std::vector<std::vector<Eigen::Index>>& comps) {
    std::string s = "comparison graph is disconnected; components:";
    for (const auto& c : comps) {
      s += " {";
      for (std::size_t k = 0; k < c.size(); ++k) {
        if (k) s += ",";
        s += std::to_string(c[k]);
      }
      s += "}";
    }
    return s;
  }
  std::vector<std::vector<Eigen::Index>> components_;
};

/// Newton iteration ran out of budget; the last iterate is kept for diagnosis.
class NonConvergenceError : public NumericalError {
public:
  NonConvergenceError(Eigen::VectorXd last_iterate, double gradient_norm, int iterations)
      : NumericalError("Bradley-Terry fit did not converge after " +
                           std::to_string(iterations) +
                           " iterations (gradient norm " + std::to_string(gradient_norm) + ")",
                       "non_convergence"),
        last_iterate_(std::move(last_iterate)),
        gradient_norm_(gradient_norm) {}

  const Eigen::VectorXd& last_iterate() const noexcept { return last_iterate_; }
  double gradient_norm() const noexcept { return gradient_norm_; }

private:
  Eigen::VectorXd last_iterate_;
  double gradient_norm_;
};

/// Wraps the first failing item of a batch operation.
class BatchItemError : public Error {
public:
  BatchItemError(std::size_t index, const Error& cause)
      : Error(cause.kind(), cause.code(),
              "item " + std::to_string(index) + ": " + cause.what()),
        index_(index) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

/// Adds a context prefix to an error while keeping kind and code.
class ContextError : public Error {
public:
  ContextError(const std::string& context, const Error& cause)
      : Error(cause.kind(), cause.code(), context + ": " + cause.what()) {}
};

}  // namespace lbps

#endif  // LBPS_ERROR_HPP
