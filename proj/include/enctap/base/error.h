// enctap/base/error.h

// Copyright 2026 The enctap Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef ENCTAP_BASE_ERROR_H_
#define ENCTAP_BASE_ERROR_H_

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace enctap {

/// Base of every error thrown by the toolkit.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string &what) : std::runtime_error(what) {}
};

/// Bad arguments or malformed data handed to an operation.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// NaN/inf appeared in a forward pass or in the training loss.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// Two model architectures cannot be combined (shape or vocab mismatch).
class IncompatibleArchitecture : public Error {
 public:
  using Error::Error;
};

/// File parse errors (manifests, configs, WAV headers).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint could not be read or has the wrong format version.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// A frozen parameter received a gradient or changed during training.
class FreezeViolation : public Error {
 public:
  using Error::Error;
};

namespace internal {
inline void StreamAll(std::ostringstream &) {}
template <typename First, typename... Rest>
void StreamAll(std::ostringstream &os, First &&first, Rest &&...rest) {
  os << std::forward<First>(first);
  StreamAll(os, std::forward<Rest>(rest)...);
}
}  // namespace internal

template <typename... Args>
std::string StrCat(Args &&...args) {
  std::ostringstream os;
  internal::StreamAll(os, std::forward<Args>(args)...);
  return os.str();
}

}  // namespace enctap

#endif  // ENCTAP_BASE_ERROR_H_
