#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace mott {

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

// Raised when a frozen or finite environment would need atoms it does not have.
struct WindowExhausted : std::out_of_range {
  std::int64_t requested;
  WindowExhausted(const std::string& what, std::int64_t idx)
      : std::out_of_range(what + " (index " + std::to_string(idx) + ")"), requested(idx) {}
};

struct InsufficientRecords : std::runtime_error {
  int achieved;
  InsufficientRecords(const std::string& what, int got)
      : std::runtime_error(what + " (records found: " + std::to_string(got) + ")"), achieved(got) {}
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace mott
