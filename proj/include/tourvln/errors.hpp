// Copyright 2026 The tourvln Authors
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

namespace tourvln {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input line (bad JSON, wrong field type). Carries the 1-based line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed record that violates the annotation schema.
class SchemaError : public ParseError {
 public:
  using ParseError::ParseError;
};

/// Two records share the same (video_id, frame_index).
class DuplicateFrameError : public ParseError {
 public:
  using ParseError::ParseError;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration value. `field()` names the offending key.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Missing or unreadable input file.
class InputError : public Error {
 public:
  using Error::Error;
};

/// A generator could not produce its output (no template for R, empty pool, ...).
class GenerationError : public Error {
 public:
  using Error::Error;
};

/// Strategy or operation does not apply to the given input. Callers fall through.
class Inapplicable : public Error {
 public:
  using Error::Error;
};

}  // namespace tourvln
