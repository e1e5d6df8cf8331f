#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace scamlens {

/// Failure categories raised by the library. The CLI reports them by name.
enum class ErrorKind {
  MalformedReport,
  InvalidRecord,
  SourceUnavailable,
  DegenerateClass,
  EmptyHistory,
  TooFewRows,
  DimensionMismatch,
  SingleClass,
  TooFewMinority,
  ShapeMismatch,
  EmptyNode,
  UntrainedModel,
  LengthMismatch,
  EmptyMatrix,
  BadInput,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::MalformedReport: return "MalformedReport";
    case ErrorKind::InvalidRecord: return "InvalidRecord";
    case ErrorKind::SourceUnavailable: return "SourceUnavailable";
    case ErrorKind::DegenerateClass: return "DegenerateClass";
    case ErrorKind::EmptyHistory: return "EmptyHistory";
    case ErrorKind::TooFewRows: return "TooFewRows";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingleClass: return "SingleClass";
    case ErrorKind::TooFewMinority: return "TooFewMinority";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::EmptyNode: return "EmptyNode";
    case ErrorKind::UntrainedModel: return "UntrainedModel";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::EmptyMatrix: return "EmptyMatrix";
    case ErrorKind::BadInput: return "BadInput";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(std::string_view module, ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(module) + "/" + std::string(to_string(kind)) + ": " + what),
        module_(module),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::string_view name() const noexcept { return to_string(kind_); }
  const std::string& module() const noexcept { return module_; }

 private:
  std::string module_;
  ErrorKind kind_;
};

}  // namespace scamlens
