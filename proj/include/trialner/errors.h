// Copyright 2026 The TrialNER Authors.
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

#ifndef TRIALNER_ERRORS_H_
#define TRIALNER_ERRORS_H_

#include <stdexcept>
#include <string>

namespace trialner {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Array shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// A NaN or infinity escaped a numerical operation.
class NumericError : public Error {
 public:
  using Error::Error;
};

// File could not be opened, read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed input data (bad JSON line, corrupt checkpoint, bad TSV row).
class ParseError : public Error {
 public:
  using Error::Error;
};

// Inconsistent configuration or model/data mismatch.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Caller violated an operation precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

}  // namespace trialner

#endif  // TRIALNER_ERRORS_H_
