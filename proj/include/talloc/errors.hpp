#pragma once

#include <stdexcept>
#include <string>

namespace talloc {

// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct AllZeroError : Error {
  explicit AllZeroError(const std::string& msg) : Error("AllZero: " + msg) {}
};

struct EvenCommitteeError : Error {
  explicit EvenCommitteeError(const std::string& msg)
      : Error("EvenCommittee: " + msg) {}
};

struct OutOfRangeError : Error {
  explicit OutOfRangeError(const std::string& msg)
      : Error("OutOfRange: " + msg) {}
};

struct DimensionMismatchError : Error {
  explicit DimensionMismatchError(const std::string& msg)
      : Error("DimensionMismatch: " + msg) {}
};

struct MuOutOfRangeError : Error {
  explicit MuOutOfRangeError(const std::string& msg)
      : Error("MuOutOfRange: " + msg) {}
};

struct LengthMismatchError : Error {
  explicit LengthMismatchError(const std::string& msg)
      : Error("LengthMismatch: " + msg) {}
};

struct SingleClassError : Error {
  explicit SingleClassError(const std::string& msg)
      : Error("SingleClass: " + msg) {}
};

struct TooFewTrialsError : Error {
  explicit TooFewTrialsError(const std::string& msg)
      : Error("TooFewTrials: " + msg) {}
};

struct BudgetInfeasibleError : Error {
  explicit BudgetInfeasibleError(const std::string& msg)
      : Error("BudgetInfeasible: " + msg) {}
};

struct ParseError : Error {
  ParseError(const std::string& msg, long line)
      : Error("ParseError (line " + std::to_string(line) + "): " + msg),
        line_number(line) {}
  long line_number;
};

struct ValidationError : Error {
  explicit ValidationError(const std::string& msg)
      : Error("ValidationError: " + msg) {}
};

struct ConfigError : Error {
  explicit ConfigError(const std::string& msg) : Error("ConfigError: " + msg) {}
};

}  // namespace talloc
