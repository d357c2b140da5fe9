#pragma once

#include <stdexcept>
#include <string>

namespace rbound {

//! Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

//! Two grids with different GridSpecs were combined.
struct GridMismatchError : Error {
  using Error::Error;
};

//! A density with (numerically) zero mass where positive mass is required.
struct DegenerateDensityError : Error {
  using Error::Error;
};

//! Probability mass would escape through the domain boundary.
struct LeakError : Error {
  using Error::Error;
};

//! An iterative numerical scheme failed to converge.
struct ConvergenceError : Error {
  double last_estimate = 0.0;
  double previous_estimate = 0.0;
  ConvergenceError(const std::string& what, double last, double previous)
    : Error(what), last_estimate(last), previous_estimate(previous) {}
};

//! File could not be read, written, or parsed.
struct IoError : Error {
  using Error::Error;
};

} // namespace rbound
