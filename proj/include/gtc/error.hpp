// gtc/error.hpp

// Copyright 2026  The GTC Authors

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

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gtc {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input text. Carries the source name and 1-based line number
/// (0 when the error is not tied to a line).
class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& msg)
      : Error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + msg),
        source_(source),
        line_(line) {}

  const std::string& source() const { return source_; }
  std::size_t line() const { return line_; }

 private:
  std::string source_;
  std::size_t line_;
};

/// A file could not be opened or written.
class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(what) {}
};

/// The supervision graph admits no length-T unfolding, so p(G|X) = 0.
class InfeasibleError : public Error {
 public:
  InfeasibleError() : Error("infeasible: no length-T path") {}
};

/// An automaton accepts no string.
class EmptyLanguageError : public Error {
 public:
  EmptyLanguageError() : Error("empty language: no accepting path") {}
};

/// A brute-force oracle was asked to enumerate more than its budget allows.
class BudgetExceeded : public Error {
 public:
  explicit BudgetExceeded(const std::string& what)
      : Error("instance too large for oracle: " + what) {}
};

}  // namespace gtc
