#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace crimetype {

enum class ErrorKind {
  Io,
  Schema,
  Parameter,
  InsufficientData,
  UnknownLabel,
  State,
  Configuration,
  DegenerateRow,
  Label,
  Divergence,
  UnsupportedModel,
  Format,
};

std::string_view to_string(ErrorKind kind);

// Base for every error raised by the library. The kind decides the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& m) : Error(ErrorKind::Io, m) {}
};

class SchemaError : public Error {
 public:
  explicit SchemaError(const std::string& m) : Error(ErrorKind::Schema, m) {}
};

class ParameterError : public Error {
 public:
  explicit ParameterError(const std::string& m) : Error(ErrorKind::Parameter, m) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& m)
      : Error(ErrorKind::InsufficientData, m) {}
};

class UnknownLabelError : public Error {
 public:
  explicit UnknownLabelError(std::string text)
      : Error(ErrorKind::UnknownLabel, "unknown crime label: '" + text + "'"),
        text_(std::move(text)) {}

  const std::string& text() const noexcept { return text_; }

 private:
  std::string text_;
};

class StateError : public Error {
 public:
  explicit StateError(const std::string& m) : Error(ErrorKind::State, m) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& m) : Error(ErrorKind::Configuration, m) {}
};

class DegenerateRowError : public Error {
 public:
  explicit DegenerateRowError(std::size_t row)
      : Error(ErrorKind::DegenerateRow,
              "probability row " + std::to_string(row) + " has non-positive sum"),
        row_(row) {}

  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class LabelError : public Error {
 public:
  explicit LabelError(const std::string& m) : Error(ErrorKind::Label, m) {}
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(int epoch)
      : Error(ErrorKind::Divergence,
              "training loss became non-finite at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}

  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

class UnsupportedModelError : public Error {
 public:
  explicit UnsupportedModelError(const std::string& m)
      : Error(ErrorKind::UnsupportedModel, m) {}
};

// Malformed or unsupported serialized document.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& m) : Error(ErrorKind::Format, m) {}
};

}  // namespace crimetype
