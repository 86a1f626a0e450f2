// Copyright 2026 The rescue-mfbo Authors. All Rights Reserved.
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
// =============================================================================

#ifndef RESCUE_ERRORS_HPP
#define RESCUE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace rescue {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input outside the domain of an operation (bounds, lengths, non-finite values).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Operation called on an object in the wrong state (e.g. empty dataset).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Linear algebra failed even after jitter escalation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace rescue

#endif  // RESCUE_ERRORS_HPP
