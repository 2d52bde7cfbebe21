// Error types shared across the adx3 engine.
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace adx3 {

/// One broken invariant, reported against the event that breaks it.
/// `event_id` is empty for track-level problems.
struct Violation {
  std::string event_id;
  std::string rule;
  std::string message;

  bool operator==(const Violation&) const = default;
  auto operator<=>(const Violation&) const = default;
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class AssetMismatch : public Error {
 public:
  using Error::Error;
};

class ValidationFailed : public Error {
 public:
  explicit ValidationFailed(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t byte_offset)
      : Error(what), offset_(byte_offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class VersionError : public Error {
 public:
  explicit VersionError(int version)
      : Error("unsupported schema_version " + std::to_string(version)), version_(version) {}
  int version() const noexcept { return version_; }

 private:
  int version_;
};

class DegenerateVector : public Error {
 public:
  using Error::Error;
};

class InsufficientInput : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class TemplateError : public Error {
 public:
  using Error::Error;
};

/// Transport-level provider failure (network, timeout, non-2xx). Retryable.
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// The provider answered, but not in the requested shape.
class ProviderFormatError : public Error {
 public:
  using Error::Error;
};

class GuidelinesNotAcknowledged : public Error {
 public:
  using Error::Error;
};

class PlanConflict : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

/// Optimistic-concurrency failure: the caller's expected version is stale.
class Conflict : public Error {
 public:
  Conflict(const std::string& what, int current_version)
      : Error(what), current_version_(current_version) {}
  int current_version() const noexcept { return current_version_; }

 private:
  int current_version_;
};

class Forbidden : public Error {
 public:
  using Error::Error;
};

/// Mutation attempted on a published draft.
class Locked : public Error {
 public:
  using Error::Error;
};

class RejectedWithViolations : public Error {
 public:
  explicit RejectedWithViolations(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const noexcept { return violations_; }

 private:
  std::vector<Violation> violations_;
};

class Unavailable : public Error {
 public:
  using Error::Error;
};

class NoFrames : public Error {
 public:
  using Error::Error;
};

/// A required environment variable, port, or writable path is unavailable.
class EnvironmentError : public Error {
 public:
  using Error::Error;
};

class CardinalityError : public Error {
 public:
  using Error::Error;
};

std::string describe(const std::vector<Violation>& violations);

}  // namespace adx3
