// Copyright 2026 The annofix Authors
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

namespace annofix {

/// Malformed file syntax. Line and column are 1-based; offset is a byte index.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column, std::size_t offset)
      : std::runtime_error(what), line_(line), column_(column), offset_(offset) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t line_;
  std::size_t column_;
  std::size_t offset_;
};

/// Well-formed input that violates a data-model invariant. `frame()` is the
/// 1-based frame the violation refers to, or 0 when it is not frame-specific.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what, std::size_t frame = 0)
      : std::runtime_error(what), frame_(frame) {}

  std::size_t frame() const noexcept { return frame_; }

 private:
  std::size_t frame_;
};

class ImageError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class DegeneratePatchError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

class MatchInfeasibleError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A metric that is undefined for the given input (e.g. hit rate with no visible frame).
class MetricError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace annofix
