#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace secure {

// Root of every error the library throws.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(what + " (at position " + std::to_string(position) + ")"),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class EvalError : public Error {
 public:
  using Error::Error;
};

// Enumeration would exceed the configured number of coupled atoms.
class CapacityError : public Error {
 public:
  using Error::Error;
};

// The domain theory has zero weighted model count. `formula_index` names the
// most recently added member of the theory that was involved.
class InconsistencyError : public Error {
 public:
  InconsistencyError(const std::string& what, std::size_t formula_index)
      : Error(what), formula_index_(formula_index) {}

  std::size_t formula_index() const noexcept { return formula_index_; }

 private:
  std::size_t formula_index_;
};

class GroundingUnavailable : public Error {
 public:
  using Error::Error;
};

class AmbiguityError : public Error {
 public:
  using Error::Error;
};

class PlanningError : public Error {
 public:
  using Error::Error;
};

class ExecutionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  using Error::Error;
};

// A session message arrived when a different turn was expected.
class ProtocolError : public Error {
 public:
  ProtocolError(const std::string& what, std::string expected)
      : Error(what), expected_(std::move(expected)) {}

  const std::string& expected() const noexcept { return expected_; }

 private:
  std::string expected_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

}  // namespace secure
