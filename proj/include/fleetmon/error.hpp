// Copyright 2026 The fleetmon Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fleetmon {

enum class ErrorCode {
  kConfig,
  kCapacity,
  kCorruption,
  kNotFound,
  kUnavailable,
  kValidation,
  kAlignment,
  kInsufficientData,
  kMigration,
  kIo,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base of every error the library throws. The code lets callers (the CLI,
/// the HTTP layer) map failures to exit codes or status codes without
/// downcasting.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

template <ErrorCode C>
class TypedError : public Error {
 public:
  explicit TypedError(const std::string& message) : Error(C, message) {}
};

using ConfigError = TypedError<ErrorCode::kConfig>;
using CapacityError = TypedError<ErrorCode::kCapacity>;
using CorruptionError = TypedError<ErrorCode::kCorruption>;
using NotFoundError = TypedError<ErrorCode::kNotFound>;
using UnavailableError = TypedError<ErrorCode::kUnavailable>;
using ValidationError = TypedError<ErrorCode::kValidation>;
using AlignmentError = TypedError<ErrorCode::kAlignment>;
using InsufficientDataError = TypedError<ErrorCode::kInsufficientData>;
using MigrationError = TypedError<ErrorCode::kMigration>;
using IoError = TypedError<ErrorCode::kIo>;

inline std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kCapacity: return "capacity";
    case ErrorCode::kCorruption: return "corruption";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kUnavailable: return "unavailable";
    case ErrorCode::kValidation: return "validation";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kInsufficientData: return "insufficient_data";
    case ErrorCode::kMigration: return "migration";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace fleetmon
