// Copyright 2026 The AME Authors
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

#pragma once

#include <stdexcept>
#include <string>

namespace ame {

// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad constructor arguments (non-positive rate, empty support, n < 2, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IndexOutOfRange : public Error {
 public:
  using Error::Error;
};

class EmptyMarket : public Error {
 public:
  EmptyMarket() : Error("market has no exchanges") {}
};

class NegativeLambda : public Error {
 public:
  explicit NegativeLambda(std::size_t index)
      : Error("exchange " + std::to_string(index) + " has non-positive lambda"),
        index_(index) {}
  std::size_t index() const { return index_; }

 private:
  std::size_t index_;
};

// Virtual value is not strictly increasing on the validation grid.
class NotRegular : public Error {
 public:
  using Error::Error;
};

// A root search, quadrature or segment propagation produced a non-finite or
// out-of-tolerance result.
class SolverDiverged : public Error {
 public:
  using Error::Error;
};

class DegenerateSegment : public Error {
 public:
  using Error::Error;
};

// A dominance or stability check was called on a market outside its hypothesis.
class HypothesisViolated : public Error {
 public:
  using Error::Error;
};

}  // namespace ame
