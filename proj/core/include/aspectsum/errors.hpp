#pragma once

#include <stdexcept>
#include <string>

namespace aspectsum {

// Bad user input: malformed config values, precondition violations.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public ValidationError {
 public:
  explicit ConfigError(const std::string& msg) : ValidationError(msg) {}
};

// Malformed input file; carries the file name and, when known, a byte offset.
class ParseError : public ValidationError {
 public:
  ParseError(const std::string& file, std::size_t offset, const std::string& msg)
      : ValidationError(file + " (offset " + std::to_string(offset) + "): " + msg),
        file_(file),
        offset_(offset) {}
  ParseError(const std::string& file, const std::string& msg)
      : ValidationError(file + ": " + msg), file_(file), offset_(0) {}

  const std::string& file() const { return file_; }
  std::size_t offset() const { return offset_; }

 private:
  std::string file_;
  std::size_t offset_;
};

// Cross-artifact inconsistency (duplicate ids, orphan rows, broken lineage).
class IntegrityError : public std::runtime_error {
 public:
  explicit IntegrityError(const std::string& msg) : std::runtime_error(msg) {}
};

// A pluggable backend (embedding, encoder, summarizer) failed or is absent.
class BackendError : public std::runtime_error {
 public:
  explicit BackendError(const std::string& msg) : std::runtime_error(msg) {}
};

// A pipeline stage failed mid-run. The CLI maps these to exit code 2.
class StageError : public std::runtime_error {
 public:
  StageError(const std::string& stage, const std::string& msg)
      : std::runtime_error("stage '" + stage + "': " + msg), stage_(stage) {}

  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace aspectsum
