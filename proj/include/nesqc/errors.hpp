// Copyright 2026 The nesqc Authors
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

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nesqc {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidDimensionError : public Error {
  using Error::Error;
};
class InvalidMatrixError : public Error {
  using Error::Error;
};
class DegenerateCovarianceError : public Error {
  using Error::Error;
};
class IndexError : public Error {
  using Error::Error;
};
class ArityError : public Error {
  using Error::Error;
};
class ConsistencyError : public Error {
  using Error::Error;
};
class InvalidSpecError : public Error {
  using Error::Error;
};
class SizeError : public Error {
  using Error::Error;
};
class InvalidPopulationError : public Error {
  using Error::Error;
};
class InvalidScaleError : public Error {
  using Error::Error;
};
class EvaluationError : public Error {
  using Error::Error;
};
class InvalidBatchError : public Error {
  using Error::Error;
};
class DivergenceError : public Error {
  using Error::Error;
};
class AlignmentError : public Error {
  using Error::Error;
};
class ConfigError : public Error {
  using Error::Error;
};

/// Hamiltonian file syntax error. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string &what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

} // namespace nesqc
