#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace demoaug {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// geometry / warping
class DegenerateChord : public Error {
 public:
  using Error::Error;
};
class KeyposeMismatch : public Error {
 public:
  using Error::Error;
};

// annotation / retargeting
class EmptyDemo : public Error {
 public:
  using Error::Error;
};
class MalformedResponse : public Error {
 public:
  using Error::Error;
};
class AnnotationFailed : public Error {
 public:
  AnnotationFailed(const std::string& what, int attempts)
      : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};
class RetargetFailed : public Error {
 public:
  RetargetFailed(const std::string& what, int attempts)
      : Error(what), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};
class UnknownObject : public Error {
 public:
  using Error::Error;
};

// bandit
class NoArms : public Error {
 public:
  using Error::Error;
};
class GoalReached : public Error {
 public:
  using Error::Error;
};

// simworld
class ObjectAttached : public Error {
 public:
  using Error::Error;
};

// campaign
class SchemaViolation : public Error {
 public:
  SchemaViolation(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace demoaug
