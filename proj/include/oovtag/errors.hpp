// Copyright 2026 The oovtag Authors.
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

#ifndef OOVTAG_ERRORS_HPP_
#define OOVTAG_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace oovtag {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  ValidationError(std::size_t position, const std::string& message)
      : Error("position " + std::to_string(position) + ": " + message),
        position_(position) {}
  std::size_t position() const { return position_; }

 private:
  std::size_t position_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

// Raised by an Infiller. Callers fall back to the lexicon infiller.
class InfillError : public Error {
 public:
  using Error::Error;
};

class TransportError : public InfillError {
 public:
  using InfillError::InfillError;
};

class ProtocolError : public InfillError {
 public:
  using InfillError::InfillError;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace oovtag

#endif  // OOVTAG_ERRORS_HPP_
