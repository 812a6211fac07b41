// Copyright 2026 The p4d Authors. All Rights Reserved.
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

namespace p4d {

// Numeric values double as CLI exit codes and C API status codes.
enum class ErrorKind : int {
  kValidation = 1,
  kIo = 2,
  kInternal = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_validation(const std::string& what) {
  throw Error(ErrorKind::kValidation, what);
}

[[noreturn]] inline void throw_io(const std::string& what) {
  throw Error(ErrorKind::kIo, what);
}

[[noreturn]] inline void throw_internal(const std::string& what) {
  throw Error(ErrorKind::kInternal, what);
}

}  // namespace p4d
