#pragma once

#include <stdexcept>
#include <string>

namespace bss {

enum class ErrorKind {
  InvalidArgument,
  RankDeficient,
  Collinear,
  NotApplicable,
  Diverged,
  InvalidK,
  InsufficientHistory,
  TooSparseColumn,
  MissingTransformRow,
  NonMonotoneDates,
  UnparseableCell,
  NonPositiveForLog,
  TargetMissing,
  ConfigInvalid,
  InputMissing,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::RankDeficient: return "RankDeficient";
    case ErrorKind::Collinear: return "Collinear";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::Diverged: return "Diverged";
    case ErrorKind::InvalidK: return "InvalidK";
    case ErrorKind::InsufficientHistory: return "InsufficientHistory";
    case ErrorKind::TooSparseColumn: return "TooSparseColumn";
    case ErrorKind::MissingTransformRow: return "MissingTransformRow";
    case ErrorKind::NonMonotoneDates: return "NonMonotoneDates";
    case ErrorKind::UnparseableCell: return "UnparseableCell";
    case ErrorKind::NonPositiveForLog: return "NonPositiveForLog";
    case ErrorKind::TargetMissing: return "TargetMissing";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::InputMissing: return "InputMissing";
  }
  return "Unknown";
}

/// Library-wide exception; `kind()` tells callers which contract was broken.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace bss
