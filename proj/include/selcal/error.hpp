/*
 * Copyright 2026 The selcal Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace selcal {

// Base class for every error raised by the library. The CLI maps
// ValidationError (and its subclasses) and IoError to exit code 2, everything
// else to 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller-supplied input is unusable: bad arguments, invariant violations,
// malformed configs.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A file does not carry the expected magic/version.
class FormatError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A file has the right format but inconsistent or truncated contents.
class CorruptionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// A function was evaluated outside of its domain (e.g. a zero-density point).
class DomainError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Optimization produced a non-finite value.
class TrainingError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace selcal
