#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace emotod {

/// Root of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input files or records.
class SchemaError : public Error {
 public:
  using Error::Error;
};

class MissingAnnotation : public Error {
 public:
  MissingAnnotation(std::string dialogue_id, std::size_t turn)
      : Error("dialogue " + dialogue_id + " turn " + std::to_string(turn) +
              ": user turn has no emotion label"),
        dialogue_id_(std::move(dialogue_id)),
        turn_(turn) {}

  const std::string& dialogue_id() const { return dialogue_id_; }
  std::size_t turn() const { return turn_; }

 private:
  std::string dialogue_id_;
  std::size_t turn_;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ArityError : public Error {
 public:
  using Error::Error;
};

class UnknownDomain : public Error {
 public:
  explicit UnknownDomain(const std::string& domain)
      : Error("unknown domain: " + domain) {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t a, std::size_t b)
      : Error("length mismatch: " + std::to_string(a) + " vs " +
              std::to_string(b)) {}
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

}  // namespace emotod
