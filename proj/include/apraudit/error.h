#pragma once

#include <stdexcept>
#include <string>

namespace apraudit {

// Base of every error raised by the harness itself.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

// An invariant of a loaded dataset does not hold. Carries the offending
// entry id (may be empty for dataset-level problems) and field name.
class ValidationError : public Error {
 public:
  ValidationError(std::string entry_id, std::string field, const std::string& what)
      : Error(entry_id.empty() ? field + ": " + what
                               : entry_id + ": " + field + ": " + what),
        entry_id_(std::move(entry_id)),
        field_(std::move(field)) {}

  const std::string& entry_id() const { return entry_id_; }
  const std::string& field() const { return field_; }

 private:
  std::string entry_id_;
  std::string field_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// The adapter (harness side) broke, as opposed to the subject failing.
class AdapterFailure : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public AdapterFailure {
 public:
  using AdapterFailure::AdapterFailure;
};

class DuplicateAdapter : public Error {
 public:
  using Error::Error;
};

class UnknownAdapter : public Error {
 public:
  using Error::Error;
};

class UnknownTest : public Error {
 public:
  using Error::Error;
};

class NotDeletable : public Error {
 public:
  using Error::Error;
};

class DuplicateTest : public Error {
 public:
  using Error::Error;
};

class NoFailingTest : public Error {
 public:
  using Error::Error;
};

class InconsistentSets : public Error {
 public:
  using Error::Error;
};

}  // namespace apraudit
