#pragma once

#include <stdexcept>
#include <string>

namespace bgc {

/// A caller violated an operation's documented precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite or otherwise out-of-domain numeric input.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Missing, unreadable, malformed or tampered run files.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class AnalysisErrorKind {
  EmptyInput,
  UnidentifiableTheta,
  NonConvergent,
};

/// The input was well formed but the analysis has no meaningful answer.
class AnalysisError : public std::runtime_error {
 public:
  AnalysisError(AnalysisErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  AnalysisErrorKind kind() const noexcept { return kind_; }

 private:
  AnalysisErrorKind kind_;
};

}  // namespace bgc
