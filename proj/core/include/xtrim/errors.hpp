// Copyright 2026 The xtrim Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace xtrim {

/// Base class for all xtrim failures.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Tensor extents do not line up for the requested operation.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& what) : Error(what) {}
};

/// A configuration invariant is violated; the message names it.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what) {}
};

/// A pruning step produced an empty feature selection.
class SelectionEmptyError : public Error {
public:
    explicit SelectionEmptyError(const std::string& what) : Error(what) {}
};

/// A cache state does not match the model or phase it is used with.
class StateError : public Error {
public:
    explicit StateError(const std::string& what) : Error(what) {}
};

/// A trace stream is malformed; `offset` is the byte position of the problem.
class TraceFormatError : public Error {
public:
    TraceFormatError(const std::string& what, std::size_t offset)
        : Error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

}  // namespace xtrim
