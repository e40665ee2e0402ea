// Copyright 2026 The losadapt Authors.
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

#ifndef LOSADAPT_ERRORS_HPP_
#define LOSADAPT_ERRORS_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace losadapt {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two grids (or a grid and a spec) disagree on geometry or class count.
class SpecMismatch : public Error {
 public:
  using Error::Error;
};

/// A point with a NaN or infinite coordinate.
class RejectedPoint : public Error {
 public:
  using Error::Error;
};

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

/// Malformed or truncated input file. `offset` is the byte (or line) position
/// at which parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::int64_t offset)
      : Error(what + " (at offset " + std::to_string(offset) + ")"), offset_(offset) {}

  std::int64_t offset() const { return offset_; }

 private:
  std::int64_t offset_;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// NaN or infinity reached an optimizer.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace losadapt

#endif  // LOSADAPT_ERRORS_HPP_
