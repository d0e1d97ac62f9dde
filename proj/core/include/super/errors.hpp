#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace super {

/// A caller broke a documented precondition (bad dimension, out-of-range
/// action, non-finite input).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Invalid configuration. The message names the offending field.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Sampling was requested from a buffer that holds nothing.
class EmptySampleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or incompatible binary/JSON payload (checkpoints, wire records).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A gradient step produced non-finite values.
class TrainingDivergence : public std::runtime_error {
 public:
  TrainingDivergence(const std::string& what, std::uint64_t step)
      : std::runtime_error(what + " (optimizer step " + std::to_string(step) + ")"),
        step_(step) {}

  std::uint64_t step() const noexcept { return step_; }

 private:
  std::uint64_t step_;
};

}  // namespace super
