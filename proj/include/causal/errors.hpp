#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace causal {

/// Base of every error the engine throws. `kind()` is a stable tag used in
/// CLI diagnostics.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define CAUSAL_DEFINE_ERROR(Name)                                     \
  class Name : public Error {                                         \
   public:                                                            \
    explicit Name(const std::string& what) : Error(#Name, what) {}    \
  };

// Input shape problems. The message carries a JSON-pointer-like path.
CAUSAL_DEFINE_ERROR(SchemaError)
CAUSAL_DEFINE_ERROR(ValidationError)
CAUSAL_DEFINE_ERROR(DesignError)
CAUSAL_DEFINE_ERROR(DegenerateError)
CAUSAL_DEFINE_ERROR(DomainError)
CAUSAL_DEFINE_ERROR(CovariateMismatch)
CAUSAL_DEFINE_ERROR(MixedDesignError)
CAUSAL_DEFINE_ERROR(InsufficientStudies)
CAUSAL_DEFINE_ERROR(ConfigError)
CAUSAL_DEFINE_ERROR(ArityError)
CAUSAL_DEFINE_ERROR(NegativeInteraction)
CAUSAL_DEFINE_ERROR(DegenerateWeights)
CAUSAL_DEFINE_ERROR(AllZeroMass)
CAUSAL_DEFINE_ERROR(RiskOverflow)
CAUSAL_DEFINE_ERROR(EnumerationBound)

#undef CAUSAL_DEFINE_ERROR

/// Misclassification back-correction produced a negative count.
class InfeasibleCorrection : public Error {
 public:
  InfeasibleCorrection(std::string cell, double value)
      : Error("InfeasibleCorrection",
              "corrected count for cell '" + cell + "' is negative (" +
                  std::to_string(value) + ")"),
        cell_(std::move(cell)),
        value_(value) {}
  const std::string& cell() const noexcept { return cell_; }
  double value() const noexcept { return value_; }

 private:
  std::string cell_;
  double value_;
};

}  // namespace causal
