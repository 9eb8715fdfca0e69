#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace crrl {

/// A numeric argument lies outside the domain of a formula (nonpositive
/// epsilon, confidence outside (0,1), ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Tensors or MDPs whose (S, A, H, s0) do not agree.
class ShapeMismatch : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An MDP violates a structural invariant (row sums, reward range, ...).
class InvalidMdp : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Exhaustive policy enumeration would exceed the configured cap.
class CapExceeded : public std::runtime_error {
 public:
  CapExceeded(std::uint64_t required, std::uint64_t cap, std::string detail)
      : std::runtime_error(std::move(detail)), required_(required), cap_(cap) {}
  std::uint64_t required() const noexcept { return required_; }
  std::uint64_t cap() const noexcept { return cap_; }

 private:
  std::uint64_t required_;
  std::uint64_t cap_;
};

/// Adversary parameters out of range.
class BadSpec : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Ledger interval outside the recorded episodes.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// The environment has no episodes left in its budget.
class BudgetExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Runs being aggregated do not share the same episode count.
class MismatchedHorizons : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed configuration text. The message carries "source:line: ".
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
  explicit ConfigError(const std::string& what) : std::runtime_error(what), line_(0) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace crrl
