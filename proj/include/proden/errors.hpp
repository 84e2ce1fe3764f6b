#pragma once

#include <stdexcept>
#include <string>

namespace proden {

// Base of every error thrown by the library. `category()` drives the CLI
// exit code.
class Error : public std::runtime_error {
 public:
  enum class Category { Config, Data, Divergence, Other };

  explicit Error(const std::string& what, Category category = Category::Other)
      : std::runtime_error(what), category_(category) {}

  Category category() const noexcept { return category_; }

 private:
  Category category_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row)
      : Error("row " + std::to_string(row) + ": " + what, Category::Data), row_(row) {}
  explicit ParseError(const std::string& what) : Error(what, Category::Data), row_(0) {}

  // 1-based row of the offending input line, 0 when not tied to a row.
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class LabelTypeError : public ParseError {
 public:
  LabelTypeError(const std::string& token, std::size_t row)
      : ParseError("label '" + token + "' is not an integer class index", row) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(what, Category::Data) {}
};

class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& what) : Error(what, Category::Data) {}
};

class InsufficientDataError : public Error {
 public:
  explicit InsufficientDataError(const std::string& what) : Error(what, Category::Data) {}
};

class MissingTruthError : public Error {
 public:
  explicit MissingTruthError(const std::string& what) : Error(what, Category::Data) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(what, Category::Config) {}
};

class SupportError : public DomainError {
 public:
  explicit SupportError(const std::string& what) : DomainError(what) {}
};

class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& what) : Error(what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(what, Category::Config) {}
};

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, int epoch, int batch)
      : Error(what + " (epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ")",
              Category::Divergence),
        epoch_(epoch),
        batch_(batch) {}

  int epoch() const noexcept { return epoch_; }
  int batch() const noexcept { return batch_; }

 private:
  int epoch_;
  int batch_;
};

}  // namespace proden
