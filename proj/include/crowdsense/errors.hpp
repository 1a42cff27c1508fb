#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace crowdsense {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejected observation stream.
class StreamError : public Error {
 public:
  enum class Kind { DuplicateObservation, NonMonotoneFrame, NonFiniteCoordinate };

  StreamError(Kind kind, std::size_t index, std::int64_t frame, std::string agent_id);

  Kind kind() const { return kind_; }
  std::size_t index() const { return index_; }
  std::int64_t frame() const { return frame_; }
  const std::string& agent_id() const { return agent_id_; }

 private:
  Kind kind_;
  std::size_t index_;
  std::int64_t frame_;
  std::string agent_id_;
};

class InsufficientData : public Error {
 public:
  using Error::Error;
};

class InsufficientHistory : public Error {
 public:
  using Error::Error;
};

class EmptyWindow : public Error {
 public:
  using Error::Error;
};

class NotWarmedUp : public Error {
 public:
  using Error::Error;
};

class NormalizationMismatch : public Error {
 public:
  using Error::Error;
};

class UnknownPreset : public Error {
 public:
  explicit UnknownPreset(const std::string& name) : Error("unknown preset: " + name) {}
};

class DegenerateLabels : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Input text that could not be parsed; line numbers are 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}

  std::size_t line() const { return line_; }
  const std::string& reason() const { return reason_; }

 private:
  std::size_t line_;
  std::string reason_;
};

class KeyMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace crowdsense
