#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace thl {

/// Base of every error raised by the library. The category drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  enum class Category { kDimension = 10, kConfig = 11, kFormat = 12, kIo = 13, kNumeric = 14, kGraph = 15 };

  Error(Category category, const std::string& what) : std::runtime_error(what), category_(category) {}
  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(Category::kDimension, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(Category::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(Category::kIo, what) {}
};

/// Raised when a tensor op produces NaN or Inf. `op()` names the producing op.
class NumericError : public Error {
 public:
  NumericError(std::string op, const std::string& what)
      : Error(Category::kNumeric, what), op_(std::move(op)) {}
  const std::string& op() const noexcept { return op_; }

 private:
  std::string op_;
};

/// Misuse of the autograd graph (non-scalar loss, repeated backward, missing backward).
class GraphError : public Error {
 public:
  explicit GraphError(const std::string& what) : Error(Category::kGraph, what) {}
};

/// Malformed WAV or checkpoint bytes. Each failure mode has its own kind.
class FormatError : public Error {
 public:
  enum class Kind {
    kParse,
    kBadMagic,
    kVersionMismatch,
    kTruncated,
    kUnsupportedSampleRate,
    kUnsupportedChannels,
    kUnsupportedEncoding,
    kShapeMismatch,
  };

  FormatError(Kind kind, const std::string& what, std::int64_t offset = -1)
      : Error(Category::kFormat, offset >= 0 ? what + " (at byte offset " + std::to_string(offset) + ")" : what),
        kind_(kind),
        offset_(offset) {}

  Kind kind() const noexcept { return kind_; }
  std::int64_t offset() const noexcept { return offset_; }

 private:
  Kind kind_;
  std::int64_t offset_;
};

}  // namespace thl
