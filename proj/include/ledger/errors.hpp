#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace ledger {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad user input or configuration; the CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class LabelError : public Error {
 public:
  enum class Kind { MissingField, InvalidOption, ContactInconsistency };

  LabelError(Kind kind, std::string field, std::string token = {})
      : Error(describe(kind, field, token)), kind_(kind), field_(std::move(field)),
        token_(std::move(token)) {}

  Kind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }
  const std::string& token() const noexcept { return token_; }

 private:
  static std::string describe(Kind kind, const std::string& field, const std::string& token) {
    switch (kind) {
      case Kind::MissingField:
        return "missing label field '" + field + "'";
      case Kind::InvalidOption:
        return "invalid option '" + token + "' for label field '" + field + "'";
      case Kind::ContactInconsistency:
        return "has_other_contact is N but contact_channels lists '" + token + "'";
    }
    return "label error";
  }

  Kind kind_;
  std::string field_;
  std::string token_;
};

// Line-numbered failures while reading a JSONL corpus (1-based lines).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class CorpusLabelError : public Error {
 public:
  CorpusLabelError(std::size_t line, const LabelError& cause)
      : Error("line " + std::to_string(line) + ": " + cause.what()), line_(line),
        field_(cause.field()) {}
  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

class DimensionError : public Error {
 public:
  DimensionError(std::size_t found, std::size_t expected)
      : Error("dimension mismatch: found " + std::to_string(found) + ", expected " +
              std::to_string(expected)),
        found_(found) {}
  std::size_t found() const noexcept { return found_; }

 private:
  std::size_t found_;
};

class MissingEmbedding : public Error {
 public:
  explicit MissingEmbedding(const std::string& post_id)
      : Error("no embedding stored for post '" + post_id + "'"), post_id_(post_id) {}
  const std::string& post_id() const noexcept { return post_id_; }

 private:
  std::string post_id_;
};

class SizeError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class EmptySplit : public Error {
 public:
  using Error::Error;
};

class NonFiniteLoss : public Error {
 public:
  NonFiniteLoss(std::size_t epoch, std::size_t batch)
      : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch)),
        epoch_(epoch), batch_(batch) {}
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

class ImageDecodeError : public Error {
 public:
  using Error::Error;
};

class TooSmall : public Error {
 public:
  TooSmall(std::size_t height, std::size_t width)
      : Error("image too small: " + std::to_string(height) + "x" + std::to_string(width) +
              " (need at least 2x2)") {}
};

class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

}  // namespace ledger
