#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace fxbench {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Input files

class FileNotFound : public Error {
 public:
  explicit FileNotFound(std::string path)
      : Error("file not found: " + path), path_(std::move(path)) {}
  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// A row (1-based data row, header excluded) failed validation.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t row, std::string field, std::string reason)
      : Error("row " + std::to_string(row) + ", field '" + field + "': " + reason),
        row_(row),
        field_(std::move(field)),
        reason_(std::move(reason)) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& field() const noexcept { return field_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  std::size_t row_;
  std::string field_;
  std::string reason_;
};

class UnknownTicker : public Error {
 public:
  UnknownTicker(std::size_t row, std::string ticker)
      : Error("row " + std::to_string(row) + ": ticker '" + ticker + "' is not in the universe"),
        row_(row),
        ticker_(std::move(ticker)) {}
  std::size_t row() const noexcept { return row_; }
  const std::string& ticker() const noexcept { return ticker_; }

 private:
  std::size_t row_;
  std::string ticker_;
};

class EmptySelection : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Prompts

class TemplateError : public Error {
 public:
  using Error::Error;
};

class GranularityMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyGroup : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Backend calls

enum class FailureKind { Auth, RateLimited, Timeout, Backend, FixtureMiss };

const char* to_string(FailureKind kind) noexcept;

/// Failure of a single backend round-trip.
class BackendFailure : public Error {
 public:
  BackendFailure(FailureKind kind, const std::string& what) : Error(what), kind_(kind) {}
  FailureKind kind() const noexcept { return kind_; }

 private:
  FailureKind kind_;
};

class AuthError : public BackendFailure {
 public:
  explicit AuthError(const std::string& what) : BackendFailure(FailureKind::Auth, what) {}
};

class RateLimited : public BackendFailure {
 public:
  explicit RateLimited(const std::string& what) : BackendFailure(FailureKind::RateLimited, what) {}
};

class Timeout : public BackendFailure {
 public:
  explicit Timeout(const std::string& what) : BackendFailure(FailureKind::Timeout, what) {}
};

class BackendError : public BackendFailure {
 public:
  BackendError(int status, std::string body)
      : BackendFailure(FailureKind::Backend,
                       "backend returned status " + std::to_string(status) + ": " + body),
        status_(status),
        body_(std::move(body)) {}
  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

class FixtureMiss : public BackendFailure {
 public:
  explicit FixtureMiss(std::string prompt_hash)
      : BackendFailure(FailureKind::FixtureMiss, "no recorded response for prompt hash " + prompt_hash),
        prompt_hash_(std::move(prompt_hash)) {}
  const std::string& prompt_hash() const noexcept { return prompt_hash_; }

 private:
  std::string prompt_hash_;
};

/// Raised after the retry policy gave up on retryable failures.
class ExhaustedRetries : public Error {
 public:
  ExhaustedRetries(int attempts, FailureKind last_kind, const std::string& last_message)
      : Error("gave up after " + std::to_string(attempts) + " attempts: " + last_message),
        attempts_(attempts),
        last_kind_(last_kind),
        last_message_(last_message) {}
  int attempts() const noexcept { return attempts_; }
  FailureKind last_kind() const noexcept { return last_kind_; }
  const std::string& last_message() const noexcept { return last_message_; }

 private:
  int attempts_;
  FailureKind last_kind_;
  std::string last_message_;
};

class BatchAborted : public Error {
 public:
  BatchAborted(std::size_t index, const std::string& reason)
      : Error("batch aborted at item " + std::to_string(index) + ": " + reason), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

// ---------------------------------------------------------------------------
// Signals and metrics

class InvalidDistribution : public Error {
 public:
  using Error::Error;
};

class MixedModels : public Error {
 public:
  using Error::Error;
};

class NonPositivePrice : public Error {
 public:
  using Error::Error;
};

class UnmatchedDays : public Error {
 public:
  UnmatchedDays(std::size_t count, const std::string& what) : Error(what), count_(count) {}
  std::size_t count() const noexcept { return count_; }

 private:
  std::size_t count_;
};

class UnknownRecordId : public Error {
 public:
  explicit UnknownRecordId(std::string id) : Error("unknown record id: " + id), id_(std::move(id)) {}
  const std::string& id() const noexcept { return id_; }

 private:
  std::string id_;
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class EmptyInput : public Error {
 public:
  using Error::Error;
};

class DegenerateSeries : public Error {
 public:
  using Error::Error;
};

class IndexMismatch : public Error {
 public:
  using Error::Error;
};

class EmptySeries : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Configuration

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace fxbench
