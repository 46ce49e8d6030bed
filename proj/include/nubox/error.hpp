#pragma once

#include <stdexcept>
#include <string>

namespace nubox {

// Shape or length disagreement between arguments.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Malformed model, dataset, config or report text.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The point cannot be certified: misclassified, or no positive budget survives.
struct CertificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// NaN/inf encountered during optimization.
struct NumericError : std::runtime_error {
  NumericError(const std::string& what, int iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration(iteration) {}
  int iteration;
};

}  // namespace nubox
