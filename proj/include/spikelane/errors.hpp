#pragma once

#include <stdexcept>
#include <string>

namespace spikelane {

// Root of every error the library throws. Subclasses name a failure category;
// the message carries the specifics (shapes, line numbers, paths).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CorruptCheckpointError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class DegenerateFeatureError : public Error {
 public:
  using Error::Error;
};

class DegenerateLabelsError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t epoch, std::size_t batch)
      : Error(what + " (epoch " + std::to_string(epoch) + ", batch " +
              std::to_string(batch) + ")"),
        epoch_(epoch),
        batch_(batch) {}

  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace spikelane
