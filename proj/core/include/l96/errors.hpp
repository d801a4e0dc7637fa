#pragma once

#include <stdexcept>
#include <string>

namespace l96 {

/// Base class for all toolkit errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// State or matrix dimensions inconsistent with the model parameters.
struct DimensionError : Error {
  using Error::Error;
};

/// Rescale constants unusable (beta <= 0).
struct InvalidRescaleError : Error {
  using Error::Error;
};

/// Calibration found a (near-)fixed point; rescaling is undefined there.
struct DegenerateAttractorError : Error {
  using Error::Error;
};

/// Trajectory left the finite range. Carries the integration time of failure.
struct BlowUpError : Error {
  BlowUpError(const std::string& what, double t)
      : Error(what + " at t=" + std::to_string(t)), time(t) {}
  double time;
};

struct EmptyInputError : Error {
  using Error::Error;
};

/// Series too short for the requested lag window.
struct InsufficientDataError : Error {
  using Error::Error;
};

/// Covariance factorization failed; the matrix is not (numerically) SPD.
struct NonSpdCovarianceError : Error {
  using Error::Error;
};

/// Curves or histograms compared on different grids.
struct GridMismatchError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

}  // namespace l96
