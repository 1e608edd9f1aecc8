#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqtag {

// Base for every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad tensor shapes or out-of-range indices handed to a primitive.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// NaN or Inf showed up where finite values are required.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed or unreadable input data. Carries the offending line when known.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::string file = {}, std::size_t line = 0)
      : Error(line ? file + ":" + std::to_string(line) + ": " + what
                   : (file.empty() ? what : file + ": " + what)),
        file_(std::move(file)),
        line_(line) {}

  const std::string& file() const { return file_; }
  std::size_t line() const { return line_; }

 private:
  std::string file_;
  std::size_t line_;
};

// Model container problems: bad magic, version mismatch, truncation, checksum.
class FormatError : public Error {
 public:
  using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch, std::size_t sentence)
      : Error(what), epoch_(epoch), sentence_(sentence) {}

  int epoch() const { return epoch_; }
  std::size_t sentence() const { return sentence_; }

 private:
  int epoch_;
  std::size_t sentence_;
};

}  // namespace seqtag
