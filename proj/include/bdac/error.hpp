#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace bdac {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

// Arrhenius exponent exceeded the configured cap.
class RateOverflowError : public Error {
 public:
  RateOverflowError(std::size_t alpha, double exponent)
      : Error("rate overflow at cluster size " + std::to_string(alpha) +
              " (exponent " + std::to_string(exponent) + ")"),
        alpha_(alpha) {}
  std::size_t alpha() const noexcept { return alpha_; }

 private:
  std::size_t alpha_;
};

// N(z) = 0 or z_1 = 0 where a positive value is required.
class DegenerateStateError : public Error {
 public:
  using Error::Error;
};

// Time step could not be completed within the retry budget.
class StepFailure : public Error {
 public:
  StepFailure(const std::string& what, std::size_t alpha = 0,
              std::size_t cell = npos)
      : Error(what), alpha_(alpha), cell_(cell) {}

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  // Offending cluster size (0 when not attributable to one component).
  std::size_t alpha() const noexcept { return alpha_; }
  std::size_t cell() const noexcept { return cell_; }

 private:
  std::size_t alpha_;
  std::size_t cell_;
};

class KernelTooWideError : public Error {
 public:
  using Error::Error;
};

class NoRootError : public Error {
 public:
  using Error::Error;
};

class DivergentSeriesError : public Error {
 public:
  using Error::Error;
};

// Malformed configuration: unknown/ill-typed field, parse failure.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& what, std::string field = {}, int line = 0)
      : Error(format(what, field, line)), field_(std::move(field)), line_(line) {}
  const std::string& field() const noexcept { return field_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& what, const std::string& field,
                            int line) {
    std::string out = "config error";
    if (line > 0) out += " (line " + std::to_string(line) + ")";
    if (!field.empty()) out += " [" + field + "]";
    return out + ": " + what;
  }
  std::string field_;
  int line_;
};

// One of the well-posedness assumptions (A1)..(A4) does not hold.
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(std::string assumption, const std::string& what)
      : Error("(" + assumption + ") violated: " + what),
        assumption_(std::move(assumption)) {}
  const std::string& assumption() const noexcept { return assumption_; }

 private:
  std::string assumption_;
};

}  // namespace bdac
