#pragma once

#include <stdexcept>
#include <string>

namespace antic {

// Command-line usage problems. Exit code 1.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad or missing input data (parse failures, unknown labels, I/O). Exit code 2.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numeric failure during optimization (NaN/Inf loss). Exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Violated API precondition (shape mismatch, empty prefix, ...).
struct ContractViolation : std::logic_error {
  explicit ContractViolation(const std::string& msg) : std::logic_error(msg) {}
};

}  // namespace antic
