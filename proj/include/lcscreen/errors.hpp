#pragma once

#include <stdexcept>
#include <string>

namespace lcscreen {

// Input data that cannot be ingested or fails validation.
class DataError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

// A numeric failure inside the engine (non-finite likelihood, grid that cannot
// hold the requested mass, runaway iteration).
class NumericError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

class GridTooSmallError : public NumericError {
 public:
    using NumericError::NumericError;
};

}  // namespace lcscreen
