// Copyright 2026 The sgdiff Authors.
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

#ifndef SGDIFF_ERRORS_HPP
#define SGDIFF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace sgdiff {

/// Root of every error thrown by the library. The CLI maps subclasses onto
/// its exit-code taxonomy, so new error kinds should derive from one of the
/// leaves below rather than from Error directly.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// A configuration key with a missing, malformed, or out-of-range value.
class ConfigError : public ArgumentError {
 public:
  ConfigError(const std::string& key, const std::string& what)
      : ArgumentError("config key '" + key + "': " + what), key_(key), detail_(what) {}

  const std::string& key() const { return key_; }
  const std::string& detail() const { return detail_; }

 private:
  std::string key_;
  std::string detail_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(what + " (line " + std::to_string(line) + ")"), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class SamplingExhausted : public Error {
 public:
  using Error::Error;
};

/// Raised when an experiment is asked for something its contract forbids,
/// e.g. feature diffusion in a cross-dataset run.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or dataset shapes that cannot be combined.
class CompatibilityError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace sgdiff

#endif  // SGDIFF_ERRORS_HPP
