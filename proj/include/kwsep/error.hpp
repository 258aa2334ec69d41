// Copyright 2026 The kwsep Authors
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

namespace kwsep {

enum class ErrorCode {
  kMissingFile,
  kUnsupportedChannels,
  kUnsupportedEncoding,
  kMalformedFile,
  kInvalidArgument,
  kShapeMismatch,
  kInvalidState,
  kInfeasible,
  kModelKindMismatch,
  kValidation,
};

const char* to_string(ErrorCode code);

// All library failures are reported as Error; `code()` distinguishes them.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Config validation failure; `key()` names the offending field.
class ValidationError : public Error {
 public:
  ValidationError(std::string key, const std::string& what)
      : Error(ErrorCode::kValidation, key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace kwsep
