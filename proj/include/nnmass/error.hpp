#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace nnmass {

// Base error type. `code` is a stable machine-readable identifier used by the
// CLI when emitting error JSON; `context` carries optional detail (offending
// file, attainable range, ...).
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, std::string context = "")
      : std::runtime_error(message), code_(std::move(code)), context_(std::move(context)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& context() const noexcept { return context_; }

 private:
  std::string code_;
  std::string context_;
};

// Argument outside its documented range (layer index, trial count, dims, ...).
class RangeError : public Error {
 public:
  explicit RangeError(const std::string& message, std::string context = "")
      : Error("range", message, std::move(context)) {}
};

// Cell too shallow for the density denominator (depth < 3).
class DegenerateCellError : public Error {
 public:
  explicit DegenerateCellError(const std::string& message, std::string context = "")
      : Error("degenerate_cell", message, std::move(context)) {}
};

// Matrix/batch dimension mismatch.
class ShapeError : public Error {
 public:
  explicit ShapeError(const std::string& message, std::string context = "")
      : Error("shape", message, std::move(context)) {}
};

// Non-finite value where finite arithmetic is required.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& message, std::string context = "")
      : Error("numeric", message, std::move(context)) {}
};

// Malformed binary/JSON input (bad magic, truncation, ...).
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& message, std::string context = "")
      : Error("format", message, std::move(context)) {}
};

// Two inputs that must agree do not (e.g. image/label counts).
class ConsistencyError : public Error {
 public:
  explicit ConsistencyError(const std::string& message, std::string context = "")
      : Error("consistency", message, std::move(context)) {}
};

// Mathematical domain violation (log of non-positive value, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& message, std::string context = "")
      : Error("domain", message, std::move(context)) {}
};

// Regression target with zero variance.
class DegenerateVarianceError : public Error {
 public:
  explicit DegenerateVarianceError(const std::string& message, std::string context = "")
      : Error("degenerate_variance", message, std::move(context)) {}
};

// Requested operation not supported for this configuration.
class UnsupportedConfigError : public Error {
 public:
  explicit UnsupportedConfigError(const std::string& message, std::string context = "")
      : Error("unsupported_configuration", message, std::move(context)) {}
};

// Operation invoked against stale state (e.g. a forward cache that no longer
// matches the model it was produced from).
class StateError : public Error {
 public:
  explicit StateError(const std::string& message, std::string context = "")
      : Error("state", message, std::move(context)) {}
};

// Training loss left the finite range; carries the last epoch that finished
// with a finite loss (0 when none did).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, int last_finite_epoch, std::string context = "")
      : Error("divergence", message, std::move(context)),
        last_finite_epoch_(last_finite_epoch) {}
  int last_finite_epoch() const noexcept { return last_finite_epoch_; }

 private:
  int last_finite_epoch_;
};

// Design target outside the attainable interval; context carries the range.
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& message, double min_mass, double max_mass,
                  std::string context = "")
      : Error("infeasible", message, std::move(context)),
        min_mass_(min_mass),
        max_mass_(max_mass) {}

  double min_mass() const noexcept { return min_mass_; }
  double max_mass() const noexcept { return max_mass_; }

 private:
  double min_mass_;
  double max_mass_;
};

}  // namespace nnmass
