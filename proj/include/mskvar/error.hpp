// Copyright 2026 The mskvar Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mskvar {

enum class ErrorKind {
  DegenerateModel,
  AsymmetricInput,
  NegativeEntry,
  OutOfDomain,
  NotPSD,
  DimensionMismatch,
  TooLarge,
  NonFinite,
  TooFewReplicates,
  Validation,
  Io,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DegenerateModel: return "DegenerateModel";
    case ErrorKind::AsymmetricInput: return "AsymmetricInput";
    case ErrorKind::NegativeEntry: return "NegativeEntry";
    case ErrorKind::OutOfDomain: return "OutOfDomain";
    case ErrorKind::NotPSD: return "NotPSD";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::TooLarge: return "TooLarge";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::TooFewReplicates: return "TooFewReplicates";
    case ErrorKind::Validation: return "Validation";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

/// Base of every error thrown by the library. what() is prefixed with the kind name.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define MSKVAR_DEFINE_ERROR(Name)                                               \
  class Name : public Error {                                                   \
   public:                                                                      \
    explicit Name(const std::string& message) : Error(ErrorKind::Name, message) {} \
  };

MSKVAR_DEFINE_ERROR(DegenerateModel)
MSKVAR_DEFINE_ERROR(AsymmetricInput)
MSKVAR_DEFINE_ERROR(NegativeEntry)
MSKVAR_DEFINE_ERROR(OutOfDomain)
MSKVAR_DEFINE_ERROR(NotPSD)
MSKVAR_DEFINE_ERROR(DimensionMismatch)
MSKVAR_DEFINE_ERROR(TooLarge)
MSKVAR_DEFINE_ERROR(NonFinite)
MSKVAR_DEFINE_ERROR(TooFewReplicates)

#undef MSKVAR_DEFINE_ERROR

/// Model-file or argument validation failure. `path` names the offending field ("delta2[1][0]").
class ValidationError : public Error {
 public:
  ValidationError(std::string path, const std::string& message)
      : Error(ErrorKind::Validation, path + ": " + message), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorKind::Io, message) {}
};

}  // namespace mskvar
