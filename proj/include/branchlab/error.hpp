// Copyright 2026 The branchlab Authors.
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

#ifndef BRANCHLAB_ERROR_HPP_
#define BRANCHLAB_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace branchlab {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The offspring law or a model file is malformed.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

// An argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// The operation does not apply to the regime of the law (e.g. a
// non-critical formula called on a critical law).
class RegimeError : public Error {
 public:
  using Error::Error;
};

// A requested coefficient or state lies beyond the truncation.
class TruncationError : public Error {
 public:
  using Error::Error;
};

// An iterative procedure failed to converge.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace branchlab

#endif  // BRANCHLAB_ERROR_HPP_
