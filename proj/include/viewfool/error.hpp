// Copyright 2026 The viewfool-cpp Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace viewfool {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A viewpoint component fell outside its configured [v_min, v_max].
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Input lies outside the support of a density (e.g. on the bounds box).
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

/// A stored value violates a data invariant; `index` names the offending element.
class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, std::size_t index)
      : Error(what + " (voxel index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

 private:
  std::size_t index_;
};

/// The external classifier process broke the framing protocol or timed out.
class OracleError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace viewfool
