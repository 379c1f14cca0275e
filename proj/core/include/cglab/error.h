// Copyright 2026 The cglab Authors.
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

#ifndef CGLAB_ERROR_H_
#define CGLAB_ERROR_H_

#include <stdexcept>
#include <string>

namespace cglab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Violated preconditions: bad shapes, out-of-range values, empty inputs.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent dump contents.
class FormatError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Divergence, non-separable data, zero variance.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class RankDeficientError : public NumericalError {
 public:
  RankDeficientError(const std::string& what, int rank, int required)
      : NumericalError(what), rank_(rank), required_(required) {}

  int rank() const { return rank_; }
  int required() const { return required_; }
  int deficiency() const { return required_ - rank_; }

 private:
  int rank_;
  int required_;
};

}  // namespace cglab

#endif  // CGLAB_ERROR_H_
