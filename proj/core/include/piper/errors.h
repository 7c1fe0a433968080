// Copyright 2026 The Piper Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PIPER_ERRORS_H_
#define PIPER_ERRORS_H_

#include <sstream>
#include <stdexcept>
#include <string>

namespace piper {

// Invalid user-supplied configuration (bad key, out-of-range value).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An operation was called in a state where it is not defined, e.g. sampling
// from an empty replay buffer.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated structural precondition (dimension mismatch and the like). These
// are programming bugs, not runtime conditions.
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace internal {

[[noreturn]] inline void ThrowStructural(const char* file, int line,
                                         const char* condition,
                                         const std::string& message) {
  std::ostringstream out;
  out << file << ":" << line << ": check failed: " << condition;
  if (!message.empty()) out << " (" << message << ")";
  throw StructuralError(out.str());
}

}  // namespace internal
}  // namespace piper

#define PIPER_CHECK(condition, message)                                    \
  do {                                                                     \
    if (!(condition)) {                                                    \
      ::piper::internal::ThrowStructural(__FILE__, __LINE__, #condition,   \
                                         (message));                       \
    }                                                                      \
  } while (false)

#endif  // PIPER_ERRORS_H_
