/* Copyright 2026 The Freecat Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <stdexcept>
#include <string>

namespace freecat {

// Numeric values double as CLI exit codes.
enum class ErrorCode : int {
  invalid = 1,
  sampling = 2,
  numerical = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed or inconsistent category spec, config, dataset or checkpoint.
class SpecError : public Error {
 public:
  explicit SpecError(const std::string& what) : Error(ErrorCode::invalid, what) {}
};

/// Ill-typed composition or product of morphisms.
class TypeError : public Error {
 public:
  explicit TypeError(const std::string& what) : Error(ErrorCode::invalid, what) {}
};

class SamplingError : public Error {
 public:
  explicit SamplingError(const std::string& what) : Error(ErrorCode::sampling, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorCode::numerical, what) {}
};

}  // namespace freecat
